"""Deciding Hunt's hypothesis (H) for a Levy triplet, plus supporting checks.

Decision rules implemented here:

* a non-degenerate Gaussian matrix ``A`` always gives (H);
* if the Levy measure charges the complement of ``range(sqrt(A))`` with
  finite mass, (H) holds exactly when ``sqrt(A) y = b'`` is solvable, and
  this is also equivalent to the Kanda-Forst sector condition;
* a subordinator with positive drift never satisfies (H).

Everything else is reported as inconclusive rather than guessed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm, qmc

from .errors import (
    CapabilityError,
    EvaluationError,
    IntegrabilityError,
    InvalidTripletError,
    QuadratureError,
)
from .quadrature import integrate
from .spectral import RANK_RTOL, SOLVE_TOL, SolveResult, SpectralData, decompose, solve_condition_S
from .triplet import (
    MEMBERSHIP_TOL,
    Atomic,
    ExponentOnly,
    LevyTriplet,
    NoJumps,
    RadialPower,
    compensated_drift,
    exponent,
    near_range_atoms,
    restrict_off_range,
)


class Verdict(str, enum.Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    INCONCLUSIVE = "INCONCLUSIVE"


class Rule(str, enum.Enum):
    """Which decision rule produced a verdict."""

    FULL_RANK = "full_rank"
    FINITE_OFF_RANGE = "finite_off_range"
    SUBORDINATOR = "subordinator"
    NONE = "none"


RULE_TEXT = {
    Rule.FULL_RANK: "the Gaussian matrix A has full rank, and a non-degenerate Gaussian part forces (H)",
    Rule.FINITE_OFF_RANGE: (
        "mu gives finite mass to the complement of range(sqrt(A)); there (H) holds if and only if "
        "sqrt(A) y = b' is solvable, equivalently if the Kanda-Forst sector condition holds"
    ),
    Rule.SUBORDINATOR: "a subordinator satisfying (H) must have zero drift",
    Rule.NONE: "no implemented criterion covers this process",
}


@dataclass(frozen=True)
class Tolerances:
    rank_rtol: float = RANK_RTOL
    membership: float = MEMBERSHIP_TOL
    solve: float = SOLVE_TOL


@dataclass(frozen=True)
class GridSpec:
    """Log-radial frequency grid times a set of directions.

    Radii run from ``10**lo_decade`` to ``10**(lo_decade + decades)`` with
    ``per_decade`` steps per decade. ``2 n**2`` quasi-uniform directions are
    used, plus the coordinate axes and, for triplets, the eigenvectors of A.
    """

    lo_decade: float = -2.0
    decades: int = 6
    per_decade: int = 10
    direction_factor: int = 2

    @property
    def radii(self) -> np.ndarray:
        return np.logspace(self.lo_decade, self.lo_decade + self.decades, self.decades * self.per_decade + 1)


DENSITY_GRID = GridSpec(decades=8)
DENSITY_THRESHOLD = 50.0
# running max of the ratio may grow at most this many decades per radial decade
KF_MAX_LOG_SLOPE = 0.5
KF_WINDOW_DECADES = 3


def quasi_uniform_directions(n: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors in R^n."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    pts = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def probe_directions(src, grid: GridSpec, spec: Optional[SpectralData] = None) -> np.ndarray:
    n = src.n
    parts = [quasi_uniform_directions(n, grid.direction_factor * n * n), np.eye(n)]
    if spec is not None:
        parts.append(spec.O)
    dirs = np.vstack(parts)
    # drop duplicates up to sign; the ratio and Re psi are even in z
    keep = []
    for u in dirs:
        if not any(abs(abs(u @ v) - 1.0) < 1e-12 for v in keep):
            keep.append(u)
    return np.array(keep)


def _spectral_for(src, tol: Tolerances):
    return decompose(src.A, tol.rank_rtol) if isinstance(src, LevyTriplet) else None


def _evaluate_grid(src, radii, dirs, notes):
    """``psi`` on radii x dirs; rows for radii whose evaluation fails are NaN."""
    vals = np.full((radii.size, dirs.shape[0]), np.nan + 0j)
    for i, r in enumerate(radii):
        try:
            vals[i] = exponent(src, r * dirs)
        except (EvaluationError, QuadratureError) as exc:
            notes.append(f"skipped radius {r:.4g}: {exc}")
    if np.all(np.isnan(vals)):
        raise EvaluationError("exponent evaluation failed at every grid point")
    return vals


@dataclass(frozen=True)
class KandaForstEstimate:
    sup_ratio: float
    bounded_heuristic: bool
    worst_z: np.ndarray
    decade_growth: tuple
    notes: tuple = ()


def estimate_kanda_forst(src, grid: GridSpec = GridSpec(), spec: Optional[SpectralData] = None,
                         tol: Tolerances = Tolerances()) -> KandaForstEstimate:
    """Grid supremum of ``|Im psi| / (1 + Re psi)`` and a boundedness heuristic.

    The ratio is judged bounded when its running maximum grows sublinearly
    over the last three decades of the grid: by less than ``10**1.5`` in
    total, i.e. a log-log slope below 1/2. Failures of the sector condition
    show up as linear growth (slope 1) along a null direction of A, while
    bounded ratios only creep up as the grid catches new oscillation peaks.
    This is a finite check of an asymptotic property and only a heuristic.
    """
    if spec is None and isinstance(src, LevyTriplet):
        spec = _spectral_for(src, tol)
    notes: list[str] = []
    radii = grid.radii
    dirs = probe_directions(src, grid, spec)
    vals = _evaluate_grid(src, radii, dirs, notes)
    ratio = np.abs(vals.imag) / (1.0 + vals.real)
    per_radius = np.nanmax(np.where(np.isnan(ratio), -np.inf, ratio), axis=1)
    running = np.maximum.accumulate(per_radius)
    flat = int(np.nanargmax(np.where(np.isnan(ratio), -np.inf, ratio)))
    i, j = divmod(flat, dirs.shape[0])
    sup = float(ratio[i, j])
    # running maximum at the last few decade marks
    marks = [radii.size - 1 - d * grid.per_decade for d in range(KF_WINDOW_DECADES, -1, -1)]
    marks = [m for m in marks if m >= 0]
    growth = []
    for m0, m1 in zip(marks[:-1], marks[1:]):
        lo, hi = running[m0], running[m1]
        growth.append(0.0 if hi <= 0 else (math.inf if lo <= 0 else hi / lo - 1.0))
    total = float(np.prod([1.0 + g for g in growth])) if growth else 1.0
    bounded = total < 10.0 ** (KF_MAX_LOG_SLOPE * len(growth))
    return KandaForstEstimate(sup, bounded, radii[i] * dirs[j], tuple(growth), tuple(notes))


def kanda_forst_bound_fullrank(t: LevyTriplet, s: Optional[SpectralData] = None) -> float:
    """An explicit sector constant M for a triplet with full-rank A.

    With ``c`` the smallest eigenvalue of A (so ``Re psi >= c |z|^2 / 2``)::

        M = |a| / sqrt(2 c) + (int_{|x|<1} |x|^2 mu(dx)) / c + 2 mu(|x| >= 1)

    The three terms bound the drift, the compensated small jumps (via
    ``|t - sin t| <= t^2 / 2``) and the large jumps respectively.
    """
    if isinstance(t, ExponentOnly):
        raise CapabilityError("the explicit bound needs the triplet")
    if s is None:
        s = decompose(t.A)
    if s.k < t.n:
        raise ValueError(f"A has rank {s.k} < {t.n}; the explicit bound needs full rank")
    c = float(s.D[-1])
    drift = float(np.linalg.norm(t.a)) / math.sqrt(2.0 * c)
    small = t.mu.small_second_moment() / c
    large = 2.0 * t.mu.mass_outside(1.0)
    return drift + small + large


def density_growth(src, grid: GridSpec = DENSITY_GRID, spec: Optional[SpectralData] = None,
                   tol: Tolerances = Tolerances()) -> np.ndarray:
    """``min_u Re psi(r u) / ln(1 + r)`` at every grid radius."""
    if spec is None and isinstance(src, LevyTriplet):
        spec = _spectral_for(src, tol)
    radii = grid.radii
    dirs = probe_directions(src, grid, spec)
    vals = _evaluate_grid(src, radii, dirs, [])
    return np.nanmin(vals.real, axis=1) / np.log1p(radii)


def density_flag(src, grid: GridSpec = DENSITY_GRID, spec: Optional[SpectralData] = None,
                 threshold: float = DENSITY_THRESHOLD, tol: Tolerances = Tolerances()) -> bool:
    """Heuristic for ``Re psi(z) / ln(1 + |z|) -> inf`` (enough for bounded densities).

    True when the smallest directional value at the largest radius exceeds
    ``threshold`` and has been increasing over the last two decades. Never
    read a False as proof that densities do not exist.
    """
    g = density_growth(src, grid, spec, tol)
    last, prev, prev2 = g[-1], g[-1 - grid.per_decade], g[-1 - 2 * grid.per_decade]
    return bool(last > threshold and last > prev > prev2)


# ---------------------------------------------------------------------------
# Kesten's integral (one dimension)
# ---------------------------------------------------------------------------


class KestenClass(str, enum.Enum):
    CONVERGES = "CONVERGES"
    DIVERGES = "DIVERGES"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class QuadSpec:
    z0: float = 1.0
    doublings: int = 16
    decay_ratio: float = 0.75
    window: int = 4
    rtol: float = 1e-10


@dataclass(frozen=True)
class KestenResult:
    partial_integrals: list
    classification: KestenClass
    limit_estimate: Optional[float]
    is_compound_poisson: bool
    increments: tuple = ()
    notes: tuple = ()


def is_compound_poisson(src, tol: float = 1e-10) -> bool:
    """Pure compound Poisson: no Gaussian part, finite mu and no net drift."""
    if not isinstance(src, LevyTriplet):
        return False
    if np.any(src.A != 0) or isinstance(src.mu, RadialPower):
        return False
    if isinstance(src.mu, NoJumps):
        net = src.a
    else:
        net = src.a + src.mu.small_first_moment()
    return bool(np.linalg.norm(net) <= tol * (1.0 + np.linalg.norm(src.a)))


def _panel_width(src):
    if isinstance(src, LevyTriplet) and isinstance(src.mu, Atomic):
        return math.pi / float(np.max(src.mu.norms))
    return None


def kesten(src, quad: QuadSpec = QuadSpec()) -> KestenResult:
    """Partial integrals of ``Re(1 / (1 + psi(z)))`` over ``[0, z0 2**j]``.

    The integral is finite (every point non-polar) iff the increments over
    successive doublings decay; classification looks at the last ``window``
    increment ratios.
    """
    if src.n != 1:
        raise ValueError(f"Kesten's criterion is one-dimensional; got n={src.n}")

    def integrand(z):
        psi = exponent(src, z.reshape(-1, 1))
        return (1.0 / (1.0 + psi)).real

    width = _panel_width(src)
    edges = [0.0] + [quad.z0 * 2.0 ** j for j in range(quad.doublings + 1)]
    increments = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n_init = 8 if width is None else max(8, int(math.ceil((hi - lo) / width)))
        res = integrate(integrand, lo, hi, rtol=quad.rtol, atol=1e-15, n_initial=n_init, max_panels=4_000_000)
        increments.append(float(res.value))
    values = np.cumsum(increments)
    partial = [(float(u), float(v)) for u, v in zip(edges[1:], values)]

    inc = np.array(increments[-(quad.window + 1):])
    notes = []
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(inc[:-1] > 0, inc[1:] / inc[:-1], 0.0)
    if np.all(ratios < quad.decay_ratio):
        cls = KestenClass.CONVERGES
        q = float(ratios[-1])
        limit = float(values[-1] + inc[-1] * q / (1.0 - q))
    elif np.all(inc[1:] >= inc[:-1]):
        cls, limit = KestenClass.DIVERGES, None
    else:
        cls, limit = KestenClass.UNDECIDED, None
    cp = is_compound_poisson(src)
    if cp:
        notes.append("compound Poisson process: the integral test does not apply; every point is regular for itself")
    return KestenResult(partial, cls, limit, cp, tuple(increments), tuple(notes))


# ---------------------------------------------------------------------------
# Subordinators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubordinatorResult:
    verdict: Verdict
    note: str
    rule: Rule = Rule.SUBORDINATOR


def _check_subordinator_measure(mu):
    if mu is None or isinstance(mu, NoJumps):
        return
    if mu.n != 1:
        raise InvalidTripletError("a subordinator lives on the line")
    if isinstance(mu, Atomic):
        if np.any(mu.locations[:, 0] <= 0):
            raise InvalidTripletError("subordinator jumps must be positive")
        return
    if mu.isotropic or np.any(mu.directions[:, 0] <= 0):
        raise InvalidTripletError("subordinator jumps must be positive")
    if mu.alpha >= 1:
        raise IntegrabilityError(f"int (1 ^ x) mu(dx) diverges for alpha={mu.alpha} >= 1")


def subordinator_triplet(d: float, mu=None, name: str = "") -> LevyTriplet:
    """Triplet of the subordinator ``psi(z) = -i d z + int (1 - e^{izx}) mu(dx)``."""
    if d < 0:
        raise InvalidTripletError(f"drift of a subordinator must be nonnegative, got {d}")
    _check_subordinator_measure(mu)
    mu = NoJumps(1) if mu is None else mu
    comp = 0.0 if isinstance(mu, NoJumps) else float(mu.small_first_moment()[0])
    return LevyTriplet([-d - comp], [[0.0]], mu, name=name)


def subordinator_rule(d: float, mu=None) -> SubordinatorResult:
    """Necessary condition for (H): a subordinator with drift ``d > 0`` fails it."""
    if d < 0:
        raise InvalidTripletError(f"drift of a subordinator must be nonnegative, got {d}")
    _check_subordinator_measure(mu)
    if d > 0:
        return SubordinatorResult(
            Verdict.FAILS,
            "positive drift: the path is strictly increasing, points are thin but are hit with "
            "positive probability, so (H) fails",
        )
    if mu is None or isinstance(mu, NoJumps):
        note = "zero drift and no jumps: the constant process; the drift rule says nothing"
    else:
        note = (
            "zero drift: the drift rule is only necessary and says nothing here; "
            "run decide_H on subordinator_triplet(d, mu) for a verdict"
        )
    return SubordinatorResult(Verdict.INCONCLUSIVE, note)


# ---------------------------------------------------------------------------
# The verdict
# ---------------------------------------------------------------------------


@dataclass
class HuntReport:
    verdict: Verdict
    rule: Rule
    bprime: Optional[np.ndarray]
    condition_S: Optional[SolveResult]
    mu1_mass: float
    kf_ratio_sup: float
    kf_bounded_heuristic: bool
    density_flag: bool
    rank: int
    eigenvalues: np.ndarray
    kf_worst_z: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)

    @property
    def explanation(self) -> str:
        lines = [f"(H) {self.verdict.value}: {RULE_TEXT[self.rule]}."]
        if self.rule is Rule.FINITE_OFF_RANGE and self.condition_S is not None:
            state = "is solvable" if self.condition_S.solvable else "has no solution"
            lines.append(
                f"sqrt(A) y = b' {state} (distance of b' to range(sqrt(A)) = {self.condition_S.distance:.3g})."
            )
        lines.append(
            f"Grid sup |Im psi|/(1+Re psi) = {self.kf_ratio_sup:.6g}; "
            f"bounded by the growth heuristic: {self.kf_bounded_heuristic}."
        )
        lines.extend(self.notes)
        return "\n".join(lines)


def decide_H(t: LevyTriplet, tol: Tolerances = Tolerances(), grid: GridSpec = GridSpec()) -> HuntReport:
    """Verdict on Hunt's hypothesis (H) for the process with triplet ``t``."""
    if isinstance(t, ExponentOnly):
        raise CapabilityError("decide_H needs the full triplet (a, A, mu); exponent-only input given")
    s = decompose(t.A, tol.rank_rtol)
    kf = estimate_kanda_forst(t, grid, s, tol)
    notes = list(kf.notes)
    dens = density_flag(t, spec=s, tol=tol)
    common = dict(
        kf_ratio_sup=kf.sup_ratio,
        kf_worst_z=kf.worst_z,
        density_flag=dens,
        rank=s.k,
        eigenvalues=s.D,
    )

    if s.k == t.n:
        if not kf.bounded_heuristic:
            notes.append("grid growth heuristic disagreed with the full-rank guarantee; reporting bounded")
        bprime = t.b.copy()
        return HuntReport(
            Verdict.HOLDS, Rule.FULL_RANK, bprime, solve_condition_S(s, bprime, tol.solve), 0.0,
            kf_bounded_heuristic=True, notes=notes, **common,
        )

    mu1, mass = restrict_off_range(t, s, tol.membership)
    near = near_range_atoms(t, s, tol.membership)
    if near.shape[0]:
        notes.append(
            f"{near.shape[0]} atom(s) lie within 10x the membership tolerance of range(sqrt(A)); "
            "the verdict is sensitive to that tolerance"
        )
    if math.isinf(mass):
        notes.append("mu has infinite mass off range(sqrt(A)); the finite-mass criterion does not apply")
        return HuntReport(
            Verdict.INCONCLUSIVE, Rule.NONE, None, None, mass,
            kf_bounded_heuristic=kf.bounded_heuristic, notes=notes, **common,
        )
    try:
        bprime = compensated_drift(t, mu1)
    except IntegrabilityError as exc:
        notes.append(f"compensated drift undefined: {exc}")
        return HuntReport(
            Verdict.INCONCLUSIVE, Rule.NONE, None, None, mass,
            kf_bounded_heuristic=kf.bounded_heuristic, notes=notes, **common,
        )
    cond = solve_condition_S(s, bprime, tol.solve)
    verdict = Verdict.HOLDS if cond.solvable else Verdict.FAILS
    if cond.solvable != kf.bounded_heuristic:
        notes.append("grid Kanda-Forst heuristic disagrees with the solvability verdict")
    return HuntReport(
        verdict, Rule.FINITE_OFF_RANGE, bprime, cond, mass,
        kf_bounded_heuristic=kf.bounded_heuristic, notes=notes, **common,
    )
