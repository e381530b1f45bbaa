"""Levy-Ito path simulation and Monte Carlo hitting experiments.

Paths follow ``X_t = x0 + b t + sqrt(A) B_t + (large jumps) + (compensated
small jumps)``. Jumps are compound Poisson with exact exponential event
times; the Brownian part is sampled exactly on the union of the time grid
and the jump times. Small jumps of power-law measures below ``eps`` are
dropped (their variance is reported).

Every path draws from its own counter-based stream keyed by
``(master_seed, path_index)``, so results never depend on how paths are
split across workers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .errors import CapabilityError, ProbeError
from .spectral import SpectralData, decompose
from .triplet import (
    MEMBERSHIP_TOL,
    Atomic,
    ExponentOnly,
    LevyTriplet,
    NoJumps,
    RadialPower,
    compensated_drift,
    restrict_off_range,
)

EXACT_TOL = 1e-9

LARGE, SMALL, OFF_RANGE = 0, 1, 2
ORIGIN_NAMES = {LARGE: "large", SMALL: "small", OFF_RANGE: "off-range"}


@dataclass(frozen=True)
class SimConfig:
    t_max: float = 1.0
    dt: float = 0.01
    small_jump_cut: float = 1e-3
    n_paths: int = 1000
    master_seed: int = 0
    start: Optional[tuple] = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if not 0 < self.dt <= self.t_max:
            raise ValueError(f"dt must lie in (0, t_max], got {self.dt}")
        if not 0 < self.small_jump_cut <= 1:
            raise ValueError(f"small_jump_cut must lie in (0, 1], got {self.small_jump_cut}")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.start is not None:
            object.__setattr__(self, "start", tuple(float(v) for v in self.start))

    @property
    def grid(self) -> np.ndarray:
        m = max(1, int(round(self.t_max / self.dt)))
        return np.linspace(0.0, self.t_max, m + 1)


@dataclass(frozen=True)
class JumpLog:
    """Jumps of a single path, in time order."""

    times: np.ndarray
    jumps: np.ndarray
    origins: np.ndarray
    pre_states: np.ndarray
    post_states: np.ndarray

    def records(self):
        for t, dx, o in zip(self.times, self.jumps, self.origins):
            yield float(t), dx, ORIGIN_NAMES[int(o)]


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Simulated paths on the grid plus a flat, path-ordered jump table.

    Jumps of path ``p`` occupy rows ``jump_offsets[p]:jump_offsets[p + 1]``
    of the ``jump_*`` arrays. ``drift`` is the drift actually applied,
    ``b - compensator``.
    """

    times: np.ndarray
    paths: np.ndarray
    start: np.ndarray
    b: np.ndarray
    compensator: np.ndarray
    gauss_final: np.ndarray
    jump_offsets: np.ndarray
    jump_times: np.ndarray
    jumps: np.ndarray
    jump_origins: np.ndarray
    pre_states: np.ndarray
    post_states: np.ndarray
    config: SimConfig
    spectral: SpectralData
    neglected_variance: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def drift(self) -> np.ndarray:
        return self.b - self.compensator

    @property
    def jump_counts(self) -> np.ndarray:
        return np.diff(self.jump_offsets)

    @property
    def jump_path(self) -> np.ndarray:
        """Path index of every row of the jump table."""
        return np.repeat(np.arange(self.n_paths), self.jump_counts)

    def path_jumps(self, p: int) -> JumpLog:
        sl = slice(self.jump_offsets[p], self.jump_offsets[p + 1])
        return JumpLog(self.jump_times[sl], self.jumps[sl], self.jump_origins[sl],
                       self.pre_states[sl], self.post_states[sl])

    @cached_property
    def jump_log(self) -> list:
        return [self.path_jumps(p) for p in range(self.n_paths)]

    def first_off_range_jump(self) -> np.ndarray:
        return first_off_range_jump(self, self.spectral)


# ---------------------------------------------------------------------------
# Jump samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _JumpSampler:
    n: int
    rate: float = 0.0
    locations: Optional[np.ndarray] = None
    cum_probs: Optional[np.ndarray] = None
    measure: Optional[RadialPower] = None
    eps: float = 0.0

    def marks(self, rng, count):
        if count == 0:
            return np.zeros((0, self.n))
        if self.locations is not None:
            return self.locations[_categorical(rng, self.cum_probs, count)]
        mu = self.measure
        u = rng.random(count)
        lo = self.eps ** (-mu.alpha)
        hi = 0.0 if math.isinf(mu.cutoff) else mu.cutoff ** (-mu.alpha)
        radii = (lo - u * (lo - hi)) ** (-1.0 / mu.alpha)
        if mu.isotropic:
            g = rng.standard_normal((count, mu.n))
            dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        else:
            w = mu.weights / mu.weights.sum()
            dirs = mu.directions[_categorical(rng, np.cumsum(w), count)]
        return radii[:, None] * dirs


def _categorical(rng, cum_probs, count):
    idx = np.searchsorted(cum_probs / cum_probs[-1], rng.random(count), side="right")
    return np.minimum(idx, cum_probs.size - 1)


def _jump_sampler(t: LevyTriplet, eps: float):
    """Sampler for the simulated jumps, their compensator and the dropped variance."""
    mu = t.mu
    n = t.n
    if isinstance(mu, NoJumps):
        return _JumpSampler(n), np.zeros(n), 0.0
    if isinstance(mu, Atomic):
        return (_JumpSampler(n, mu.total_mass(), mu.locations, np.cumsum(mu.masses)),
                mu.small_first_moment(), 0.0)
    if eps >= mu.cutoff:
        return _JumpSampler(n), np.zeros(n), mu.small_second_moment_below(eps)
    rate = mu.mass_between(eps, math.inf)
    if not math.isfinite(rate):
        raise ValueError("the Levy measure has infinite mass above the small-jump cut")
    comp = mu.small_first_moment(eps)
    return _JumpSampler(n, rate, measure=mu, eps=eps), comp, mu.small_second_moment_below(eps)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def path_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based (Philox) stream for one path."""
    ss = np.random.SeedSequence(int(master_seed) & (2 ** 64 - 1), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class _Context:
    n_steps: int
    n: int
    gaussian: bool
    sampler: _JumpSampler
    t_max: float
    seed: int


def _draw_path(ctx: _Context, index: int):
    """All random input of one path: jump count, sorted times, marks and normals."""
    rng = path_rng(ctx.seed, index)
    count = int(rng.poisson(ctx.sampler.rate * ctx.t_max)) if ctx.sampler.rate > 0 else 0
    jt = np.sort(rng.random(count) * ctx.t_max)
    jumps = ctx.sampler.marks(rng, count)
    z = rng.standard_normal((ctx.n_steps + count, ctx.n)) if ctx.gaussian else None
    return count, jt, jumps, z


def _draw_chunk(ctx: _Context, indices):
    return [_draw_path(ctx, i) for i in indices]


def _assemble(draws, grid, start, drift, sqrtA, gaussian):
    """Turn per-path draws into states; every operation acts row by row."""
    P, n, m1 = len(draws), start.size, grid.size
    counts = np.array([d[0] for d in draws], dtype=np.int64)
    C = int(counts.max()) if P else 0
    E = m1 + C
    jmask = np.arange(C) < counts[:, None]

    T = np.full((P, E), np.inf)
    T[:, :m1] = grid
    J = np.zeros((P, C, n))
    if C:
        T[:, m1:][jmask] = np.concatenate([d[1] for d in draws])
        J[jmask] = np.concatenate([d[2] for d in draws])

    order = np.argsort(T, axis=1, kind="stable")
    rows = np.arange(P)[:, None]
    jumps_before = np.empty((P, E), dtype=np.int64)
    jumps_before[rows, order] = np.cumsum(order >= m1, axis=1)

    W = np.zeros((P, E, n))
    if gaussian:
        ts = np.take_along_axis(T, order, axis=1)
        dts = np.diff(np.where(np.isinf(ts), grid[-1], ts), axis=1)
        Z = np.zeros((P, E - 1, n))
        Z[np.arange(E - 1) < (m1 - 1 + counts)[:, None]] = np.concatenate([d[3] for d in draws])
        Z *= np.sqrt(dts)[:, :, None]
        inc = np.zeros_like(Z)
        for i in range(n):
            for j in range(n):
                inc[:, :, i] += sqrtA[i, j] * Z[:, :, j]
        Ws = np.zeros((P, E, n))
        Ws[:, 1:] = np.cumsum(inc, axis=1)
        W[rows, order] = Ws

    cum = np.concatenate([np.zeros((P, 1, n)), np.cumsum(J, axis=1)], axis=1)
    J_grid = np.take_along_axis(cum, jumps_before[:, :m1, None], axis=1)
    paths = start + grid[:, None] * drift + W[:, :m1] + J_grid

    jt = T[:, m1:][jmask]
    post = start + jt[:, None] * drift + W[:, m1:][jmask] + cum[:, 1:][jmask]
    jumps = J[jmask]
    return paths, counts, jt, jumps, post - jumps, post, W[:, m1 - 1]


def sample_paths(t: LevyTriplet, cfg: SimConfig, workers: int = 1) -> PathEnsemble:
    """Simulate ``cfg.n_paths`` independent paths of the process with triplet ``t``.

    ``workers > 1`` draws the random input in worker processes; the
    ensemble is bit-identical for any worker count.
    """
    if isinstance(t, ExponentOnly):
        raise CapabilityError("simulation needs the triplet (a, A, mu); exponent-only input given")
    s = decompose(t.A)
    start = np.zeros(t.n) if cfg.start is None else np.asarray(cfg.start, dtype=float)
    if start.shape != (t.n,):
        raise ValueError(f"start must have {t.n} components")
    sampler, comp, neglected = _jump_sampler(t, cfg.small_jump_cut)
    grid = cfg.grid
    gaussian = bool(np.any(s.sqrtA != 0))
    ctx = _Context(grid.size - 1, t.n, gaussian, sampler, cfg.t_max, cfg.master_seed)

    if workers <= 1:
        draws = _draw_chunk(ctx, range(cfg.n_paths))
    else:
        bounds = np.linspace(0, cfg.n_paths, workers + 1).astype(int)
        chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            draws = [d for part in pool.map(_draw_chunk, [ctx] * len(chunks), chunks) for d in part]

    paths, counts, jt, jumps, pre, post, gauss = _assemble(draws, grid, start, t.b - comp, s.sqrtA, gaussian)
    origins = np.full(jt.size, SMALL, dtype=np.int8)
    if jt.size:
        origins[np.linalg.norm(jumps, axis=1) >= 1.0] = LARGE
        origins[s.off_range(jumps)] = OFF_RANGE
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return PathEnsemble(grid, paths, start, t.b, comp, gauss, offsets, jt, jumps, origins,
                        pre, post, cfg, s, neglected)


def first_off_range_jump(ens: PathEnsemble, spec: SpectralData, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Per path, the time of the first jump off ``range(sqrt(A))`` (``inf`` if none)."""
    out = np.full(ens.n_paths, np.inf)
    if ens.jump_times.size:
        off = spec.off_range(ens.jumps, tol)
        np.minimum.at(out, ens.jump_path[off], ens.jump_times[off])
    return out


# ---------------------------------------------------------------------------
# Hitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    point: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float)
        b = np.atleast_2d(np.asarray(self.basis, dtype=float)) if np.size(self.basis) else np.zeros((0, p.size))
        if b.shape[0]:
            q, _ = np.linalg.qr(b.T)
            b = q.T[: np.linalg.matrix_rank(b)]
        if b.shape[0] >= p.size:
            raise ValueError("an affine subspace target must have dimension < n")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "basis", b)

    def distance(self, x: np.ndarray) -> np.ndarray:
        d = x - self.point
        if self.basis.shape[0]:
            d = d - (d @ self.basis.T) @ self.basis
        return np.linalg.norm(d, axis=-1)

    def describe(self) -> dict:
        return {"type": "subspace", "point": self.point.tolist(), "basis": self.basis.tolist()}


@dataclass(frozen=True, eq=False)
class Point:
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    def distance(self, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(y - self.x, axis=-1)

    def describe(self) -> dict:
        return {"type": "point", "x": self.x.tolist()}


Target = Union[AffineSubspace, Point]


def range_target(spec: SpectralData) -> AffineSubspace:
    """``range(sqrt(A))`` as a hitting target."""
    return AffineSubspace(np.zeros(spec.n), spec.range_basis)


@dataclass(frozen=True)
class HittingEstimate:
    target: dict
    tube_delta: float
    p_hat: float
    ci95_halfwidth: float
    n_hits: int
    n_paths: int


def _hit_mask(ens: PathEnsemble, target, radius):
    hit = np.any(target.distance(ens.paths[:, 1:, :]) <= radius, axis=1)
    if ens.jump_times.size:
        near = (target.distance(ens.post_states) <= radius) | (target.distance(ens.pre_states) <= radius)
        near &= ens.jump_times > 0
        hit[ens.jump_path[near]] = True
    return hit


def estimate_hitting(ens: PathEnsemble, target: Target, tube_delta: float = 0.0) -> HittingEstimate:
    """Fraction of paths inside the closed ``tube_delta``-tube of ``target`` at some
    recorded time in ``(0, t_max]`` (grid times, and both sides of every jump).

    ``tube_delta = 0`` means exact membership up to ``1e-9``. Crossings between
    recorded times are missed, so this underestimates the hitting probability.
    """
    if ens.n_paths == 0:
        raise ValueError("empty ensemble")
    if tube_delta < 0:
        raise ValueError("tube_delta must be nonnegative")
    radius = EXACT_TOL if tube_delta == 0 else tube_delta
    hits = int(np.count_nonzero(_hit_mask(ens, target, radius)))
    p = hits / ens.n_paths
    half = 1.96 * math.sqrt(p * (1 - p) / ens.n_paths)
    return HittingEstimate(target.describe(), float(tube_delta), p, half, hits, ens.n_paths)


@dataclass(frozen=True)
class ThinnessReport:
    n_paths: int
    paths_with_revisits: int
    revisit_count: int
    checked_times: int
    min_distance: float
    off_range_jump_fraction: float
    bprime: tuple = field(default=())


def thinness_probe(t: LevyTriplet, spec: SpectralData, cfg: SimConfig, workers: int = 1) -> ThinnessReport:
    """Start on ``range(sqrt(A))`` and count returns to it before the first off-range jump.

    Only meaningful when ``b'`` is off the range (the case where the subspace is
    thin but not polar); any other input is rejected.
    """
    mu1, mass = restrict_off_range(t, spec)
    if math.isinf(mass):
        raise ProbeError("mu has infinite mass off range(sqrt(A)); the probe needs a finite off-range part")
    if spec.k == t.n:
        raise ProbeError("A has full rank: range(sqrt(A)) is the whole space, nothing to probe")
    bprime = compensated_drift(t, mu1)
    if spec.in_range(bprime)[0]:
        raise ProbeError(
            "b' lies in range(sqrt(A)): the process can move along the subspace, so the "
            "thinness probe's hypothesis (b' off the range) fails"
        )
    start = np.zeros(t.n) if cfg.start is None else np.asarray(cfg.start, dtype=float)
    if not spec.in_range(start, EXACT_TOL)[0]:
        raise ProbeError("the probe must start on range(sqrt(A))")
    ens = sample_paths(t, cfg, workers)
    target = range_target(spec)
    t1 = first_off_range_jump(ens, spec)
    grid = ens.times
    before = (grid[None, :] > 0) & (grid[None, :] < t1[:, None])
    d_grid = np.where(before, target.distance(ens.paths), np.inf)
    jp = ens.jump_path
    sel = (ens.jump_times > 0) & (ens.jump_times < t1[jp])
    d_jump = np.minimum(target.distance(ens.post_states[sel]), target.distance(ens.pre_states[sel]))

    on = d_grid <= EXACT_TOL
    per_path = on.sum(axis=1)
    np.add.at(per_path, jp[sel], (target.distance(ens.post_states[sel]) <= EXACT_TOL).astype(int)
              + (target.distance(ens.pre_states[sel]) <= EXACT_TOL))
    checked = int(before.sum() + 2 * sel.sum())
    dmin = float(min(d_grid.min(initial=np.inf), d_jump.min(initial=np.inf)))
    frac = float(np.mean(np.isfinite(t1)))
    return ThinnessReport(ens.n_paths, int(np.count_nonzero(per_path)), int(per_path.sum()), checked, dmin,
                          frac, tuple(bprime.tolist()))


# ---------------------------------------------------------------------------
# Text dumps
# ---------------------------------------------------------------------------


def dump_paths(ens: PathEnsemble, fh) -> None:
    """One row per (path, grid time): ``path_id,t,x_1..x_n``."""
    w = csv.writer(fh, lineterminator="\n")
    n = ens.start.shape[0]
    w.writerow(["path_id", "t"] + [f"x_{i + 1}" for i in range(n)])
    for p in range(ens.n_paths):
        for k, t in enumerate(ens.times):
            w.writerow([p, repr(float(t))] + [repr(float(v)) for v in ens.paths[p, k]])


def dump_jumps(ens: PathEnsemble, fh) -> None:
    """One row per jump: ``path_id,t,origin,dx_1..dx_n``."""
    w = csv.writer(fh, lineterminator="\n")
    n = ens.start.shape[0]
    w.writerow(["path_id", "t", "origin"] + [f"dx_{i + 1}" for i in range(n)])
    for p, t, o, dx in zip(ens.jump_path, ens.jump_times, ens.jump_origins, ens.jumps):
        w.writerow([int(p), repr(float(t)), ORIGIN_NAMES[int(o)]] + [repr(float(v)) for v in dx])
