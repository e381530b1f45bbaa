"""Levy triplets, Levy measures and the Levy-Khintchine exponent.

The exponent convention is

    psi(z) = i<a, z> + 1/2 <z, A z>
             + int (1 - exp(i<z, x>) + i<z, x> 1{|x| < 1}) mu(dx)

so that ``E exp(i<z, X_t>) = exp(-t psi(z))`` and the drift of the
process is ``b = -a``. The compensation indicator is strict: jumps of
norm exactly 1 are not compensated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _radial
from .errors import (
    CapabilityError,
    EvaluationError,
    IntegrabilityError,
    InvalidTripletError,
)

MEMBERSHIP_TOL = 1e-9


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Levy measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoJumps:
    """The zero Levy measure."""

    n: int

    kind = "none"

    def total_mass(self) -> float:
        return 0.0

    def mass_outside(self, radius: float) -> float:
        return 0.0

    def small_second_moment(self) -> float:
        return 0.0

    def jump_exponent(self, z: np.ndarray) -> np.ndarray:
        return np.zeros(z.shape[0], dtype=complex)

    def pushforward(self, rot: np.ndarray) -> "NoJumps":
        return self

    def __eq__(self, other):
        return isinstance(other, NoJumps) and other.n == self.n

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Atomic:
    """Finite sum of point masses ``sum_j mass_j * delta(location_j)``."""

    locations: np.ndarray
    masses: np.ndarray

    kind = "atomic"

    def __post_init__(self):
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if loc.shape[0] != m.shape[0]:
            raise InvalidTripletError(f"{loc.shape[0]} atom locations but {m.shape[0]} masses")
        if m.size == 0:
            raise InvalidTripletError("atomic measure needs at least one atom; use NoJumps")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(m))):
            raise InvalidTripletError("atom locations and masses must be finite")
        if np.any(m <= 0):
            raise InvalidTripletError(f"atom masses must be positive, got {m.tolist()}")
        if np.any(np.all(loc == 0.0, axis=1)):
            raise InvalidTripletError("the Levy measure cannot charge the origin")
        object.__setattr__(self, "locations", _frozen(loc))
        object.__setattr__(self, "masses", _frozen(m))

    @classmethod
    def from_pairs(cls, pairs) -> "Atomic":
        pairs = list(pairs)
        return cls([np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in pairs], [m for _, m in pairs])

    @property
    def n(self) -> int:
        return self.locations.shape[1]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.locations, axis=1)

    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def mass_outside(self, radius: float) -> float:
        return float(np.sum(self.masses[self.norms >= radius]))

    def small_second_moment(self) -> float:
        r = self.norms
        return float(np.sum(self.masses[r < 1] * r[r < 1] ** 2))

    def small_first_moment(self, eps: float = 0.0) -> np.ndarray:
        """``int_{eps <= |x| < 1} x mu(dx)``."""
        r = self.norms
        sel = (r < 1) & (r >= eps)
        return self.masses[sel] @ self.locations[sel] if np.any(sel) else np.zeros(self.n)

    def jump_exponent(self, z: np.ndarray) -> np.ndarray:
        p = z @ self.locations.T
        small = (self.norms < 1).astype(float)
        # 1 - cos written as 2 sin^2 keeps the real part exactly nonnegative
        re = (2.0 * np.sin(0.5 * p) ** 2) @ self.masses
        im = (p * small - np.sin(p)) @ self.masses
        return re + 1j * im

    def subset(self, keep: np.ndarray):
        keep = np.asarray(keep, dtype=bool)
        if not np.any(keep):
            return NoJumps(self.n)
        return Atomic(self.locations[keep], self.masses[keep])

    def pushforward(self, rot: np.ndarray) -> "Atomic":
        return Atomic(self.locations @ np.asarray(rot).T, self.masses)

    def __eq__(self, other):
        return (
            isinstance(other, Atomic)
            and np.array_equal(self.locations, other.locations)
            and np.array_equal(self.masses, other.masses)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RadialPower:
    """Power-law measure with density ``scale * |x|**(-n - alpha)`` on ``0 < |x| <= cutoff``.

    Without ``directions`` the measure is isotropic (absolutely continuous on
    R^n). With ``directions`` it lives on rays: in polar coordinates it is
    ``scale * r**(-1 - alpha) dr`` times ``sum_j weights_j * delta(u_j)``.
    ``cutoff`` may be ``inf``.
    """

    n: int
    alpha: float
    scale: float = 1.0
    cutoff: float = 1.0
    directions: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    kind = "radial_power"

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise InvalidTripletError(f"dimension must be a positive integer, got {self.n!r}")
        if not 0.0 < self.alpha < 2.0:
            raise InvalidTripletError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidTripletError(f"scale must be positive and finite, got {self.scale}")
        if not self.cutoff > 0:
            raise InvalidTripletError(f"cutoff must be positive, got {self.cutoff}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "cutoff", float(self.cutoff))
        if self.directions is None:
            if self.weights is not None:
                raise InvalidTripletError("weights given without directions")
            return
        u = np.atleast_2d(np.asarray(self.directions, dtype=float))
        w = np.ones(u.shape[0]) if self.weights is None else np.atleast_1d(np.asarray(self.weights, dtype=float))
        if u.shape[1] != self.n or w.shape[0] != u.shape[0]:
            raise InvalidTripletError("directions must be (m, n) with one weight per direction")
        norms = np.linalg.norm(u, axis=1)
        if np.any(norms == 0) or np.any(w <= 0):
            raise InvalidTripletError("directions must be nonzero and weights positive")
        # leave unit vectors alone so that serialize/parse round trips are exact
        norms = np.where(np.abs(norms - 1.0) <= 4 * np.finfo(float).eps, 1.0, norms)
        object.__setattr__(self, "directions", _frozen(u / norms[:, None]))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def isotropic(self) -> bool:
        return self.directions is None

    @property
    def direction_mass(self) -> float:
        """Total mass of the angular part (sphere area when isotropic)."""
        return _radial.sphere_area(self.n) if self.isotropic else float(np.sum(self.weights))

    def _radial_mass(self, lo: float, hi: float) -> float:
        """``scale * int_lo^hi r**(-1-alpha) dr`` clipped to the support."""
        hi = min(hi, self.cutoff)
        if lo >= hi:
            return 0.0
        if lo <= 0:
            return math.inf
        upper = 0.0 if math.isinf(hi) else hi ** (-self.alpha)
        return self.scale * (lo ** (-self.alpha) - upper) / self.alpha

    def total_mass(self) -> float:
        return math.inf

    def mass_outside(self, radius: float) -> float:
        return self.direction_mass * self._radial_mass(radius, math.inf)

    def mass_between(self, lo: float, hi: float) -> float:
        return self.direction_mass * self._radial_mass(lo, hi)

    def small_second_moment(self) -> float:
        m = min(1.0, self.cutoff)
        return self.direction_mass * self.scale * m ** (2 - self.alpha) / (2 - self.alpha)

    def small_second_moment_below(self, eps: float) -> float:
        m = min(eps, self.cutoff)
        return self.direction_mass * self.scale * m ** (2 - self.alpha) / (2 - self.alpha)

    def _radial_first_moment(self, lo: float, hi: float) -> float:
        hi = min(hi, self.cutoff)
        if lo >= hi:
            return 0.0
        if lo <= 0 and self.alpha >= 1:
            return math.inf
        if self.alpha == 1.0:
            return self.scale * math.log(hi / lo)
        p = 1.0 - self.alpha
        return self.scale * (hi ** p - max(lo, 0.0) ** p) / p

    def small_first_moment(self, eps: float = 0.0) -> np.ndarray:
        """``int_{eps <= |x| < 1} x mu(dx)``; diverges at eps = 0 unless alpha < 1."""
        radial = self._radial_first_moment(eps, 1.0)
        if math.isinf(radial):
            raise IntegrabilityError(
                f"int_{{|x|<1}} |x| mu(dx) diverges for a power-law measure with alpha={self.alpha} >= 1"
            )
        if self.isotropic:
            return np.zeros(self.n)
        return radial * (self.weights @ self.directions)

    def jump_exponent(self, z: np.ndarray) -> np.ndarray:
        c, a, R = self.scale, self.alpha, self.cutoff
        if self.isotropic:
            rho = np.linalg.norm(z, axis=1)
            out = np.zeros(z.shape[0], dtype=complex)
            nz = rho > 0
            k = _radial.kernels(a, self.n)
            out[nz] = c * _radial.sphere_area(self.n) * rho[nz] ** a * k.re_integral(R * rho[nz])
            return out
        s = z @ self.directions.T
        return _directional_exponent(s, c, a, R) @ self.weights

    def pushforward(self, rot: np.ndarray) -> "RadialPower":
        if self.isotropic:
            return self
        return RadialPower(self.n, self.alpha, self.scale, self.cutoff, self.directions @ np.asarray(rot).T, self.weights)

    def __eq__(self, other):
        if not isinstance(other, RadialPower):
            return False
        same = (self.n, self.alpha, self.scale, self.cutoff) == (other.n, other.alpha, other.scale, other.cutoff)
        if not same or self.isotropic != other.isotropic:
            return False
        return self.isotropic or (
            np.array_equal(self.directions, other.directions) and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


def _directional_exponent(s: np.ndarray, c: float, alpha: float, cutoff: float) -> np.ndarray:
    """Jump exponent of ``c r**(-1-alpha) dr`` on a unit ray, at projections ``s``."""
    shape = s.shape
    s = s.ravel()
    out = np.zeros(s.size, dtype=complex)
    nz = s != 0
    if not np.any(nz):
        return out.reshape(shape)
    k = _radial.kernels(alpha, 1)
    t = np.abs(s[nz])
    sign = np.sign(s[nz])
    scale = c * t ** alpha
    re = scale * k.re_integral(cutoff * t)
    m = min(1.0, cutoff)
    im = k.odd_small(m * t)
    if cutoff > 1.0:
        im = im - (k.sin_antideriv(cutoff * t) - k.sin_antideriv(t))
    out[nz] = re + 1j * sign * scale * im
    return out.reshape(shape)


LevyMeasure = Union[NoJumps, Atomic, RadialPower]


# ---------------------------------------------------------------------------
# Triplets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Characteristics ``(a, A, mu)`` of a Levy process on R^n."""

    a: np.ndarray
    A: np.ndarray
    mu: LevyMeasure = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = a.shape[0]
        if a.ndim != 1 or n < 1:
            raise InvalidTripletError("a must be a nonempty vector")
        if A.shape != (n, n):
            raise InvalidTripletError(f"A must be {n}x{n}, got shape {A.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(A))):
            raise InvalidTripletError("a and A must be finite")
        asym = np.abs(A - A.T)
        if np.any(asym > 1e-12 * (1 + np.abs(A))):
            raise InvalidTripletError(f"A is not symmetric (max |A_ij - A_ji| = {asym.max():.3g})")
        A = 0.5 * (A + A.T)
        eig = np.linalg.eigvalsh(A)
        radius = float(np.max(np.abs(eig)))
        if eig[0] < -1e-10 * radius:
            raise InvalidTripletError(f"A is not positive semidefinite (smallest eigenvalue {eig[0]:.3g})")
        mu = NoJumps(n) if self.mu is None else self.mu
        if mu.n != n:
            raise InvalidTripletError(f"Levy measure lives in R^{mu.n} but a has length {n}")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def b(self) -> np.ndarray:
        """Drift of the Levy-Ito decomposition, ``-a``."""
        return 0.0 - self.a  # avoids -0.0 entries

    def __eq__(self, other):
        return (
            isinstance(other, LevyTriplet)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.A, other.A)
            and self.mu == other.mu
        )

    __hash__ = None

    def parts(self):
        """Gaussian-only, drift-only and jump-only sub-triplets."""
        n, zero = self.n, np.zeros(self.n)
        return (
            LevyTriplet(zero, self.A),
            LevyTriplet(self.a, np.zeros((n, n))),
            LevyTriplet(zero, np.zeros((n, n)), self.mu),
        )


@dataclass(frozen=True, eq=False)
class ExponentOnly:
    """A process known only through a closed-form exponent.

    ``psi`` maps an ``(m, n)`` array of frequencies to ``m`` complex values.
    ``family`` and ``params`` identify it for serialization.
    """

    n: int
    psi: Callable[[np.ndarray], np.ndarray]
    family: str = "custom"
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        probe = np.vstack([np.zeros(self.n), np.random.default_rng(7).normal(size=(16, self.n)) * 3.0])
        val = np.asarray(self.psi(probe), dtype=complex)
        if abs(val[0]) > 1e-12:
            raise InvalidTripletError(f"psi(0) must vanish, got {val[0]}")
        if np.any(val.real < -1e-12):
            raise InvalidTripletError("Re psi is negative at a sampled point")

    def __eq__(self, other):
        return (
            isinstance(other, ExponentOnly)
            and (self.n, self.family) == (other.n, other.family)
            and self.params == other.params
            and self.family != "custom"
        )

    __hash__ = None


def symmetric_stable(alpha: float, scale: float = 1.0, n: int = 1, name: str = "") -> ExponentOnly:
    """``psi(z) = scale * |z|**alpha`` (the rotation-invariant stable law)."""
    if not 0 < alpha <= 2:
        raise InvalidTripletError(f"stable index must lie in (0, 2], got {alpha}")
    if scale <= 0:
        raise InvalidTripletError("scale must be positive")

    def psi(z):
        return (scale * np.linalg.norm(z, axis=-1) ** alpha).astype(complex)

    return ExponentOnly(n, psi, "symmetric_stable", {"alpha": float(alpha), "scale": float(scale)}, name)


PsiSource = Union[LevyTriplet, ExponentOnly]


# ---------------------------------------------------------------------------
# Exponent evaluation
# ---------------------------------------------------------------------------


def _as_batch(z, n):
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    zb = z.reshape(1, -1) if single else z
    if zb.shape[1] != n:
        raise ValueError(f"frequency must have {n} components, got shape {z.shape}")
    return zb, single


def exponent(t: PsiSource, z):
    """Levy-Khintchine exponent at ``z``; ``z`` may be one vector or an (m, n) batch."""
    zb, single = _as_batch(z, t.n)
    if not np.all(np.isfinite(zb)):
        raise EvaluationError("frequency must be finite", z=z)
    if isinstance(t, ExponentOnly):
        val = np.asarray(t.psi(zb), dtype=complex)
    else:
        quad = 0.5 * np.einsum("mi,ij,mj->m", zb, t.A, zb)
        val = 1j * (zb @ t.a) + quad + t.mu.jump_exponent(zb)
    bad = ~np.isfinite(val)
    if np.any(bad):
        raise EvaluationError(f"non-finite exponent at z={zb[bad][0].tolist()}", z=zb[bad][0])
    return complex(val[0]) if single else val


def symmetrized_exponent(t: PsiSource, z):
    """Exponent of the symmetrization ``X - X'``: ``2 Re psi``."""
    val = exponent(t, z)
    return 2.0 * (val.real if isinstance(val, np.ndarray) else val.real)


# ---------------------------------------------------------------------------
# Off-range restriction and compensated drift
# ---------------------------------------------------------------------------


def _require_triplet(t, what):
    if isinstance(t, ExponentOnly):
        raise CapabilityError(f"{what} needs the Levy measure and Gaussian matrix; exponent-only input given")


def restrict_off_range(t: LevyTriplet, spec, tol: float = MEMBERSHIP_TOL):
    """Restriction of ``mu`` to the complement of ``range(sqrt(A))`` and its mass.

    ``spec`` is the spectral decomposition of ``t.A``. Returns ``(mu1, mass)``
    where mass may be ``inf``.
    """
    _require_triplet(t, "restrict_off_range")
    mu = t.mu
    if spec.k == t.n or isinstance(mu, NoJumps):
        return NoJumps(t.n), 0.0
    if isinstance(mu, Atomic):
        off = spec.off_range(mu.locations, tol)
        mu1 = mu.subset(off)
        return mu1, mu1.total_mass()
    if mu.isotropic:
        # the range is a proper subspace, which has Lebesgue measure zero
        return mu, math.inf
    off = spec.off_range(mu.directions, tol)
    if not np.any(off):
        return NoJumps(t.n), 0.0
    mu1 = RadialPower(mu.n, mu.alpha, mu.scale, mu.cutoff, mu.directions[off], mu.weights[off])
    return mu1, math.inf


def near_range_atoms(t: LevyTriplet, spec, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Atoms whose distance to ``range(sqrt(A))`` is within a factor 10 of the tolerance."""
    if not isinstance(t.mu, Atomic) or spec.k == t.n:
        return np.zeros((0, t.n))
    x = t.mu.locations
    d = spec.range_distance(x)
    thr = tol * (1 + np.linalg.norm(x, axis=1))
    near = (d > thr / 10) & (d <= 10 * thr)
    return x[near]


def compensated_drift(t: LevyTriplet, mu1: LevyMeasure) -> np.ndarray:
    """``b' = -a - int_{|x|<1} x mu1(dx)``."""
    _require_triplet(t, "compensated_drift")
    if isinstance(mu1, NoJumps):
        return t.b.copy()
    if isinstance(mu1, Atomic):
        return t.b - mu1.small_first_moment()
    return t.b - mu1.small_first_moment()
