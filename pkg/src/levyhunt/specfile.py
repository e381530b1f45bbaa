"""JSON process specifications and structured report output.

A specification is a JSON object. The default ``kind`` is ``"triplet"``::

    {"name": "fails-case-2d", "n": 2, "a": [0, -1], "A": [[1, 0], [0, 0]],
     "mu": {"type": "atomic", "atoms": [{"x": [0, 2], "mass": 1}]}}

``mu`` is a tagged union: ``{"type": "none"}``, ``{"type": "atomic",
"atoms": [...]}`` or ``{"type": "radial_power", "alpha", "scale", "cutoff",
"directions", "weights"}`` (``cutoff: null`` means no cutoff). Two other
kinds exist: ``"exponent"`` (``{"family": "symmetric_stable", "alpha",
"scale"}``) and ``"subordinator"`` (drift ``d`` plus ``mu`` on (0, inf)).
The JSON schema ships as ``schemas/triplet.schema.json``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Union

import numpy as np

from .errors import InvalidTripletError, IntegrabilityError, SpecFileError
from .triplet import Atomic, ExponentOnly, LevyTriplet, NoJumps, RadialPower, symmetric_stable

SPEC_SCHEMA = "levyhunt.triplet/1"
REPORT_SCHEMA = "levyhunt.report/1"
KINDS = ("triplet", "exponent", "subordinator")
EXPONENT_FAMILIES = ("symmetric_stable",)


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    """A parsed specification: the analytic source plus how it was described."""

    source: Union[LevyTriplet, ExponentOnly]
    kind: str = "triplet"
    name: str = ""
    subordinator_drift: Optional[float] = None

    @property
    def n(self) -> int:
        return self.source.n

    def __eq__(self, other):
        return (
            isinstance(other, ProcessSpec)
            and (self.kind, self.name, self.subordinator_drift) == (other.kind, other.name, other.subordinator_drift)
            and self.source == other.source
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _Reader:
    """Field access with line-aware error messages."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line_of(self, key: str) -> Optional[int]:
        pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for i, line in enumerate(self.lines, 1):
            if pat.search(line):
                return i
        return None

    def fail(self, path: str, msg: str):
        names = re.findall(r"[A-Za-z_]+", path)
        return SpecFileError(msg, field=path, line=self.line_of(names[-1]) if names else None)

    def get(self, obj: dict, key: str, path: str, default=...):
        if key not in obj:
            if default is ...:
                raise self.fail(path, "required field is missing")
            return default
        return obj[key]

    def number(self, value, path: str, allow_none: bool = False) -> Optional[float]:
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {json.dumps(value)}")
        if not math.isfinite(value):
            raise self.fail(path, "expected a finite number")
        return float(value)

    def vector(self, value, path: str, n: Optional[int] = None) -> np.ndarray:
        if not isinstance(value, list):
            raise self.fail(path, "expected an array of numbers")
        vec = np.array([self.number(v, f"{path}[{i}]") for i, v in enumerate(value)], dtype=float)
        if n is not None and vec.size != n:
            raise self.fail(path, f"expected {n} entries, got {vec.size}")
        return vec

    def matrix(self, value, path: str, n: int) -> np.ndarray:
        if not isinstance(value, list) or len(value) != n:
            raise self.fail(path, f"expected an array of {n} rows")
        return np.vstack([self.vector(row, f"{path}[{i}]", n) for i, row in enumerate(value)])


def _parse_measure(r: _Reader, obj, n: int, path: str):
    if obj is None:
        return NoJumps(n)
    if not isinstance(obj, dict):
        raise r.fail(path, "expected an object with a 'type' field")
    kind = r.get(obj, "type", f"{path}.type")
    if kind == "none":
        return NoJumps(n)
    if kind == "atomic":
        atoms = r.get(obj, "atoms", f"{path}.atoms")
        if not isinstance(atoms, list) or not atoms:
            raise r.fail(f"{path}.atoms", "expected a nonempty array of {x, mass} objects")
        locs, masses = [], []
        for i, atom in enumerate(atoms):
            p = f"{path}.atoms[{i}]"
            if not isinstance(atom, dict):
                raise r.fail(p, "expected an object with 'x' and 'mass'")
            locs.append(r.vector(r.get(atom, "x", f"{p}.x"), f"{p}.x", n))
            masses.append(r.number(r.get(atom, "mass", f"{p}.mass"), f"{p}.mass"))
        try:
            return Atomic(locs, masses)
        except InvalidTripletError as exc:
            raise r.fail(f"{path}.atoms", str(exc)) from None
    if kind == "radial_power":
        alpha = r.number(r.get(obj, "alpha", f"{path}.alpha"), f"{path}.alpha")
        scale = r.number(obj.get("scale", 1.0), f"{path}.scale")
        cutoff = r.number(obj.get("cutoff", 1.0), f"{path}.cutoff", allow_none=True)
        dirs = obj.get("directions")
        weights = obj.get("weights")
        if dirs is not None:
            if not isinstance(dirs, list) or not dirs:
                raise r.fail(f"{path}.directions", "expected a nonempty array of vectors")
            dirs = np.vstack([r.vector(d, f"{path}.directions[{i}]", n) for i, d in enumerate(dirs)])
        if weights is not None:
            weights = r.vector(weights, f"{path}.weights")
        try:
            return RadialPower(n, alpha, scale, math.inf if cutoff is None else cutoff, dirs, weights)
        except InvalidTripletError as exc:
            raise r.fail(path, str(exc)) from None
    raise r.fail(f"{path}.type", f"unknown measure type {json.dumps(kind)}; expected none, atomic or radial_power")


def parse_spec(text: str) -> ProcessSpec:
    """Parse a JSON specification; errors carry the offending line and field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    r = _Reader(text)
    if not isinstance(doc, dict):
        raise SpecFileError("the specification must be a JSON object", line=1)
    schema = doc.get("schema", SPEC_SCHEMA)
    if schema != SPEC_SCHEMA:
        raise r.fail("schema", f"unsupported schema {json.dumps(schema)}; expected {SPEC_SCHEMA}")
    kind = doc.get("kind", "triplet")
    if kind not in KINDS:
        raise r.fail("kind", f"unknown kind {json.dumps(kind)}; expected one of {', '.join(KINDS)}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise r.fail("name", "expected a string")
    n = r.get(doc, "n", "n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise r.fail("n", f"expected a positive integer, got {json.dumps(n)}")

    if kind == "exponent":
        ex = r.get(doc, "exponent", "exponent")
        if not isinstance(ex, dict):
            raise r.fail("exponent", "expected an object with a 'family' field")
        family = r.get(ex, "family", "exponent.family")
        if family not in EXPONENT_FAMILIES:
            raise r.fail("exponent.family", f"unknown family {json.dumps(family)}")
        alpha = r.number(r.get(ex, "alpha", "exponent.alpha"), "exponent.alpha")
        scale = r.number(ex.get("scale", 1.0), "exponent.scale")
        try:
            return ProcessSpec(symmetric_stable(alpha, scale, n, name), kind, name)
        except InvalidTripletError as exc:
            raise r.fail("exponent", str(exc)) from None

    mu = _parse_measure(r, doc.get("mu"), n, "mu")
    if kind == "subordinator":
        from .hcheck import subordinator_triplet

        if n != 1:
            raise r.fail("n", "a subordinator has n = 1")
        d = r.number(r.get(doc, "d", "d"), "d")
        try:
            return ProcessSpec(subordinator_triplet(d, mu, name), kind, name, d)
        except (InvalidTripletError, IntegrabilityError) as exc:
            raise r.fail("d" if d < 0 else "mu", str(exc)) from None

    a = r.vector(r.get(doc, "a", "a"), "a", n)
    A = r.matrix(r.get(doc, "A", "A"), "A", n)
    try:
        return ProcessSpec(LevyTriplet(a, A, mu, name), kind, name)
    except InvalidTripletError as exc:
        raise r.fail("A" if "A " in str(exc) or "A must" in str(exc) else "mu", str(exc)) from None


def load_spec(path) -> ProcessSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def measure_to_dict(mu) -> dict:
    if isinstance(mu, NoJumps):
        return {"type": "none"}
    if isinstance(mu, Atomic):
        return {
            "type": "atomic",
            "atoms": [{"x": x.tolist(), "mass": float(m)} for x, m in zip(mu.locations, mu.masses)],
        }
    out = {
        "type": "radial_power",
        "alpha": mu.alpha,
        "scale": mu.scale,
        "cutoff": None if math.isinf(mu.cutoff) else mu.cutoff,
    }
    if not mu.isotropic:
        out["directions"] = mu.directions.tolist()
        out["weights"] = mu.weights.tolist()
    return out


def spec_to_dict(spec: ProcessSpec) -> dict:
    src = spec.source
    out = {"schema": SPEC_SCHEMA, "kind": spec.kind, "name": spec.name, "n": src.n}
    if spec.kind == "exponent":
        if src.family not in EXPONENT_FAMILIES:
            raise ValueError(f"cannot serialize exponent family {src.family!r}")
        out["exponent"] = {"family": src.family, **src.params}
        return out
    if spec.kind == "subordinator":
        out["d"] = spec.subordinator_drift
        out["mu"] = measure_to_dict(src.mu)
        return out
    out["a"] = src.a.tolist()
    out["A"] = src.A.tolist()
    out["mu"] = measure_to_dict(src.mu)
    return out


def dump_spec(spec: Union[ProcessSpec, LevyTriplet, ExponentOnly]) -> str:
    if not isinstance(spec, ProcessSpec):
        kind = "exponent" if isinstance(spec, ExponentOnly) else "triplet"
        spec = ProcessSpec(spec, kind, spec.name)
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Fixtures and schema
# ---------------------------------------------------------------------------


def fixture_names() -> list:
    root = resources.files("levyhunt") / "fixtures"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def fixture_path(name: str):
    p = resources.files("levyhunt") / "fixtures" / f"{name}.json"
    if not p.is_file():
        raise FileNotFoundError(f"no fixture named {name!r}; available: {', '.join(fixture_names())}")
    return p


def load_fixture(name: str) -> ProcessSpec:
    return parse_spec(fixture_path(name).read_text(encoding="utf-8"))


def spec_schema() -> dict:
    return json.loads((resources.files("levyhunt") / "schemas" / "triplet.schema.json").read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Structured output
# ---------------------------------------------------------------------------


def jsonable(x):
    """Plain JSON values; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def structured(command: str, payload: dict) -> str:
    """Versioned JSON document for a command's output (stable key order)."""
    doc = {"schema": REPORT_SCHEMA, "command": command, **payload}
    return json.dumps(jsonable(doc), indent=2, sort_keys=False) + "\n"
