"""Command-line front end: ``levyhunt {check,kesten,exponent,simulate,hit}``.

Exit codes: ``check`` returns 0 / 10 / 20 for HOLDS / FAILS / INCONCLUSIVE;
every command returns 1 on an input or evaluation error.
"""
from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import LevyHuntError
from .hcheck import (
    GridSpec,
    QuadSpec,
    Tolerances,
    Verdict,
    decide_H,
    kesten,
    subordinator_rule,
)
from .simulate import (
    Point,
    SimConfig,
    dump_jumps,
    dump_paths,
    estimate_hitting,
    first_off_range_jump,
    range_target,
    sample_paths,
    thinness_probe,
)
from .spectral import RANK_RTOL, SOLVE_TOL, decompose
from .specfile import ProcessSpec, load_spec, structured
from .triplet import MEMBERSHIP_TOL, LevyTriplet, compensated_drift, exponent, restrict_off_range

EXIT_CODES = {Verdict.HOLDS: 0, Verdict.FAILS: 10, Verdict.INCONCLUSIVE: 20}
EXIT_INPUT_ERROR = 1
COMMANDS = ("check", "kesten", "exponent", "simulate", "hit")
SEED_ENV = "LEVYHUNT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    """One parsed invocation: command, input, overrides and output target."""

    command: str
    input_path: str
    output_path: str = None
    fmt: str = "human"
    overrides: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _positive(kind=float):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _nonnegative(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _unit_interval(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _decades(text):
    v = int(text)
    if not 1 <= v <= 12:
        raise argparse.ArgumentTypeError(f"must lie in 1..12, got {text}")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _vector(text):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", "-i", required=True, help="process specification (JSON)")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("human", "structured"), default="human")

    tol = _Parser(add_help=False)
    tol.add_argument("--rank-tol", type=_positive(), default=RANK_RTOL, help="rank threshold relative to lambda_1")
    tol.add_argument("--solve-tol", type=_positive(), default=SOLVE_TOL)
    tol.add_argument("--membership-tol", type=_positive(), default=MEMBERSHIP_TOL)
    tol.add_argument("--grid-decades", type=_decades, default=6, help="radial decades of the Kanda-Forst grid")

    sim = _Parser(add_help=False)
    sim.add_argument("--seed", type=_seed, default=None, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    sim.add_argument("--paths", type=_positive(int), default=1000)
    sim.add_argument("--tmax", type=_positive(), default=1.0)
    sim.add_argument("--dt", type=_positive(), default=0.01)
    sim.add_argument("--eps", type=_unit_interval, default=1e-3, help="small-jump cut for power-law measures")
    sim.add_argument("--workers", type=_positive(int), default=1)
    sim.add_argument("--start", type=_vector, default=None, help="starting point, e.g. 0,-1")

    p = _Parser(prog="levyhunt", description="Hunt's hypothesis (H) for Levy processes.")
    p.add_argument("--version", action="version", version=f"levyhunt {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("check", parents=[common, tol], help="decide (H)")
    k = sub.add_parser("kesten", parents=[common], help="Kesten's integral (n = 1)")
    k.add_argument("--doublings", type=_positive(int), default=QuadSpec().doublings)
    e = sub.add_parser("exponent", parents=[common], help="evaluate psi on a list of points")
    e.add_argument("--zgrid", required=True, help="file with one point per line (comma or space separated)")
    s = sub.add_parser("simulate", parents=[common, sim], help="simulate paths and summarize them")
    s.add_argument("--dump-paths", help="CSV file for the path states")
    s.add_argument("--dump-jumps", help="CSV file for the jump log")
    h = sub.add_parser("hit", parents=[common, sim, tol], help="Monte Carlo hitting frequency")
    h.add_argument("--tube-delta", type=_nonnegative, default=0.0, help="0 means exact membership (1e-9)")
    h.add_argument("--from-construction", type=_nonnegative, default=None, metavar="S",
                   help="start at -b' * S (overrides --start)")
    h.add_argument("--target-point", type=_vector, default=None,
                   help="hit this point instead of range(sqrt(A))")
    h.add_argument("--thinness", action="store_true",
                   help="count returns to range(sqrt(A)) before the first off-range jump")
    return p


def manifest_from_args(args) -> RunManifest:
    keys = ("rank_tol", "solve_tol", "membership_tol", "grid_decades", "seed", "paths", "tmax", "dt", "eps",
            "workers", "start", "tube_delta", "from_construction", "target_point", "thinness", "doublings",
            "zgrid", "dump_paths", "dump_jumps")
    overrides = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    if "seed" in overrides and overrides["seed"] is None:
        env = os.environ.get(SEED_ENV)
        try:
            overrides["seed"] = _seed(env) if env else 0
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"${SEED_ENV} must be a 64-bit unsigned integer, got {env!r}") from None
    if "dt" in overrides and overrides["dt"] > overrides["tmax"]:
        raise UsageError(f"--dt {overrides['dt']} exceeds --tmax {overrides['tmax']}")
    if not os.path.isfile(args.input):
        raise UsageError(f"input file not found: {args.input}")
    return RunManifest(args.command, args.input, args.output, args.format, overrides)


def _tolerances(o) -> Tolerances:
    return Tolerances(rank_rtol=o["rank_tol"], membership=o["membership_tol"], solve=o["solve_tol"])


def _sim_config(o, start=None) -> SimConfig:
    return SimConfig(t_max=o["tmax"], dt=o["dt"], small_jump_cut=o["eps"], n_paths=o["paths"],
                     master_seed=o["seed"], start=start if start is not None else o["start"])


def _require_triplet(spec: ProcessSpec, what: str) -> LevyTriplet:
    if not isinstance(spec.source, LevyTriplet):
        raise UsageError(f"{what} needs a triplet (a, A, mu); {spec.name or 'the input'} is exponent-only")
    return spec.source


def _fmt(x) -> str:
    if isinstance(x, (list, tuple, np.ndarray)):
        return "(" + ", ".join(_fmt(v) for v in np.asarray(x, dtype=float).ravel()) + ")"
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.10g}" if isinstance(x, float) else str(x)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check(m: RunManifest, spec: ProcessSpec):
    t = _require_triplet(spec, "check")
    o = m.overrides
    report = decide_H(t, _tolerances(o), GridSpec(decades=o["grid_decades"]))
    sub = None
    if spec.kind == "subordinator":
        sub = subordinator_rule(spec.subordinator_drift, t.mu)
    cond = report.condition_S
    payload = {
        "input": spec.name,
        "verdict": report.verdict,
        "rule": report.rule,
        "explanation": report.explanation,
        "bprime": report.bprime,
        "condition_S": None if cond is None else {
            "solvable": cond.solvable, "y": cond.y, "residual": cond.residual, "distance": cond.distance,
        },
        "mu1_mass": report.mu1_mass,
        "kf_ratio_sup": report.kf_ratio_sup,
        "kf_bounded_heuristic": report.kf_bounded_heuristic,
        "kf_worst_z": report.kf_worst_z,
        "density_flag": report.density_flag,
        "rank": report.rank,
        "eigenvalues": report.eigenvalues,
        "notes": report.notes,
    }
    if sub is not None:
        payload["subordinator_rule"] = {"verdict": sub.verdict, "note": sub.note}
    if m.fmt == "structured":
        text = structured("check", payload)
    else:
        lines = [f"input: {spec.name or m.input_path}", report.explanation,
                 f"rank(A) = {report.rank}, eigenvalues {_fmt(report.eigenvalues)}",
                 f"mass of mu off range(sqrt(A)): {_fmt(float(report.mu1_mass))}"]
        if report.bprime is not None:
            lines.append(f"b' = {_fmt(report.bprime)}")
        lines.append(f"density flag (Re psi / log|z| growing): {report.density_flag}")
        if sub is not None:
            lines.append(f"subordinator drift rule: {sub.verdict.value} ({sub.note})")
        text = "\n".join(lines) + "\n"
    return EXIT_CODES[report.verdict], text


def cmd_kesten(m: RunManifest, spec: ProcessSpec):
    res = kesten(spec.source, QuadSpec(doublings=m.overrides["doublings"]))
    if m.fmt == "structured":
        return 0, structured("kesten", {
            "input": spec.name,
            "classification": res.classification,
            "limit_estimate": res.limit_estimate,
            "is_compound_poisson": res.is_compound_poisson,
            "partial_integrals": [list(p) for p in res.partial_integrals],
            "notes": list(res.notes),
        })
    lines = [f"input: {spec.name or m.input_path}", f"classification: {res.classification.value}"]
    if res.limit_estimate is not None:
        lines.append(f"limit: {res.limit_estimate:.10g}")
    lines.append(f"compound Poisson: {res.is_compound_poisson}")
    lines.extend(res.notes)
    lines.append("upper_limit partial_integral")
    lines.extend(f"{u:.6g} {v:.12g}" for u, v in res.partial_integrals)
    return 0, "\n".join(lines) + "\n"


def read_zgrid(path: str, n: int) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                vals = [float(v) for v in line.replace(",", " ").split()]
            except ValueError:
                raise UsageError(f"{path}: line {lineno}: expected numbers, got {line!r}") from None
            if len(vals) != n:
                raise UsageError(f"{path}: line {lineno}: expected {n} coordinates, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise UsageError(f"{path}: no points")
    return np.array(rows, dtype=float)


def cmd_exponent(m: RunManifest, spec: ProcessSpec):
    z = read_zgrid(m.overrides["zgrid"], spec.n)
    psi = exponent(spec.source, z)
    if m.fmt == "structured":
        return 0, structured("exponent", {
            "input": spec.name,
            "points": [{"z": zi, "re": p.real, "im": p.imag} for zi, p in zip(z, psi)],
        })
    lines = [" ".join(f"{v:.17g}" for v in zi) + f" {p.real:.17g} {p.imag:.17g}" for zi, p in zip(z, psi)]
    return 0, "\n".join(lines) + "\n"


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def cmd_simulate(m: RunManifest, spec: ProcessSpec):
    t = _require_triplet(spec, "simulate")
    o = m.overrides
    cfg = _sim_config(o)
    ens = sample_paths(t, cfg, workers=o["workers"])
    final = ens.paths[:, -1, :]
    t1 = first_off_range_jump(ens, ens.spectral)
    origins = {name: int(np.count_nonzero(ens.jump_origins == code)) for code, name in
               ((0, "large"), (1, "small"), (2, "off-range"))}
    summary = {
        "input": spec.name,
        "config": {"n_paths": cfg.n_paths, "t_max": cfg.t_max, "dt": cfg.dt, "small_jump_cut": cfg.small_jump_cut,
                   "master_seed": cfg.master_seed, "start": ens.start},
        "drift_applied": ens.drift,
        "neglected_small_jump_variance": ens.neglected_variance,
        "final_mean": final.mean(axis=0),
        "final_cov": np.atleast_2d(np.cov(final, rowvar=False)) if cfg.n_paths > 1 else np.zeros((t.n, t.n)),
        "jump_count": int(ens.jump_times.size),
        "jumps_by_origin": origins,
        "paths_with_off_range_jump": int(np.count_nonzero(np.isfinite(t1))),
        "paths_digest": _digest(ens.times, ens.paths),
        "jumps_digest": _digest(ens.jump_offsets, ens.jump_times, ens.jumps, ens.jump_origins),
    }
    if o.get("dump_paths"):
        with open(o["dump_paths"], "w", encoding="utf-8", newline="") as fh:
            dump_paths(ens, fh)
    if o.get("dump_jumps"):
        with open(o["dump_jumps"], "w", encoding="utf-8", newline="") as fh:
            dump_jumps(ens, fh)
    if m.fmt == "structured":
        return 0, structured("simulate", summary)
    lines = [
        f"input: {spec.name or m.input_path}",
        f"{cfg.n_paths} paths on [0, {cfg.t_max:g}], dt = {cfg.dt:g}, seed = {cfg.master_seed}",
        f"drift applied: {_fmt(ens.drift)}",
        f"mean of X_T: {_fmt(summary['final_mean'])}",
        f"covariance of X_T: {_fmt(summary['final_cov'])}",
        f"jumps: {summary['jump_count']} ({', '.join(f'{k} {v}' for k, v in origins.items())})",
        f"paths with an off-range jump: {summary['paths_with_off_range_jump']}",
        f"neglected small-jump variance: {ens.neglected_variance:.3g}",
        f"paths digest: {summary['paths_digest']}",
    ]
    return 0, "\n".join(lines) + "\n"


def _bprime(t: LevyTriplet, tol: Tolerances):
    s = decompose(t.A, tol.rank_rtol)
    mu1, mass = restrict_off_range(t, s, tol.membership)
    if math.isinf(mass):
        raise UsageError("mu has infinite mass off range(sqrt(A)); b' is not defined")
    return s, compensated_drift(t, mu1)


def cmd_hit(m: RunManifest, spec: ProcessSpec):
    t = _require_triplet(spec, "hit")
    o = m.overrides
    tol = _tolerances(o)
    start = o["start"]
    s = decompose(t.A, tol.rank_rtol)
    if o["from_construction"] is not None:
        s, bp = _bprime(t, tol)
        start = tuple((-bp * o["from_construction"]).tolist())
    cfg = _sim_config(o, start)
    label = "empirical corroboration (never overrides the analytic verdict)"

    if o["thinness"]:
        rep = thinness_probe(t, s, cfg, workers=o["workers"])
        payload = {"input": spec.name, "evidence": label, "probe": "thinness",
                   "start": cfg.start or [0.0] * t.n, **rep.__dict__}
        if m.fmt == "structured":
            return 0, structured("hit", payload)
        lines = [
            f"input: {spec.name or m.input_path} ({label})",
            f"thinness probe from {_fmt(payload['start'])}: {rep.paths_with_revisits} of {rep.n_paths} paths "
            f"returned to range(sqrt(A)) before the first off-range jump",
            f"recorded states checked: {rep.checked_times}, closest approach {rep.min_distance:.6g}",
            f"b' = {_fmt(rep.bprime)}",
        ]
        return 0, "\n".join(lines) + "\n"

    if o["target_point"] is not None:
        if len(o["target_point"]) != t.n:
            raise UsageError(f"--target-point needs {t.n} coordinates")
        target = Point(np.array(o["target_point"]))
    else:
        if s.k == t.n:
            raise UsageError("A has full rank: range(sqrt(A)) is the whole space; pass --target-point")
        target = range_target(s)
    ens = sample_paths(t, cfg, workers=o["workers"])
    est = estimate_hitting(ens, target, o["tube_delta"])
    payload = {"input": spec.name, "evidence": label, "start": ens.start, **est.__dict__}
    if m.fmt == "structured":
        return 0, structured("hit", payload)
    lines = [
        f"input: {spec.name or m.input_path} ({label})",
        f"target: {est.target['type']}, tube delta {est.tube_delta:g}, start {_fmt(ens.start)}",
        f"p_hat = {est.p_hat:.6f} +/- {est.ci95_halfwidth:.6f} (95%), {est.n_hits} of {est.n_paths} paths",
    ]
    return 0, "\n".join(lines) + "\n"


HANDLERS = {"check": cmd_check, "kesten": cmd_kesten, "exponent": cmd_exponent,
            "simulate": cmd_simulate, "hit": cmd_hit}


def run(m: RunManifest):
    """Execute a manifest; returns ``(exit_code, text)``."""
    spec = load_spec(m.input_path)
    return HANDLERS[m.command](m, spec)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        m = manifest_from_args(args)
        code, text = run(m)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT_ERROR
    except (LevyHuntError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT_ERROR
    if m.output_path:
        with open(m.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
