"""Declarative scenarios: JSON config in, structured report out."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from . import seq as sq
from .domain import closedness_witness, compare_domains, membership
from .finite import (
    lemma22_check,
    random_hermitian_positive,
    random_invertible,
    riesz_consistency_check,
    truncate,
)
from .hermite import hermite_demo
from .operators import (
    Form,
    ScaleOperator,
    apply,
    biorthogonality_check,
    commutator,
    is_identity,
    ladder_relations,
    make_operator,
)
from .seq import GrowthAnnotation, Outcome, Sequence

SCHEMA_VERSION = 1
TOOL_NAME = "rieszops"


class ConfigError(ValueError):
    """Schema violation; ``field`` names the offending location."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class CheckError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# sequence descriptors


def _number(x, where: str, real: bool = False):
    if isinstance(x, bool):
        raise ConfigError(where, "expected a number")
    if isinstance(x, (int, float)):
        return sq.exact(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(where, f"cannot parse number {x!r}") from None
    if isinstance(x, (list, tuple)) and len(x) == 2 and not real:
        re, im = (_number(v, where, real=True) for v in x)
        return sq.exact(complex(float(re), float(im)))
    raise ConfigError(where, "expected a number, a fraction string or [re, im]")


def _positive(x, where: str):
    v = _number(x, where, real=True)
    if v <= 0:
        raise ConfigError(where, "must be positive")
    return v


def _sub(desc: dict, key: str, where: str):
    if key not in desc:
        raise ConfigError(f"{where}.{key}", "missing")
    return desc[key]


_SEQ_KEYS = {
    "finite-support": {"values"},
    "geometric": {"ratio", "scale"},
    "polynomial-power": {"exponent", "scale"},
    "sqrt-index": set(),
    "constant": {"value"},
    "index": {"exponent"},
    "tabulated": {"values", "tail", "annotation"},
    "product": {"factors"},
    "sum": {"terms"},
    "shift": {"of", "by"},
    "conjugate": {"of"},
    "reciprocal": {"of"},
    "unannotated": {"of"},
}


def build_sequence(desc, where: str = "sequence") -> Sequence:
    """Resolve a tagged-union descriptor such as ``{"kind": "geometric", "ratio": 0.5}``."""
    if not isinstance(desc, dict):
        raise ConfigError(where, "sequence descriptor must be an object")
    kind = desc.get("kind")
    if kind not in _SEQ_KEYS:
        raise ConfigError(f"{where}.kind", f"unknown sequence kind {kind!r}")
    extra = set(desc) - _SEQ_KEYS[kind] - {"kind"}
    if extra:
        raise ConfigError(where, f"unexpected fields {sorted(extra)}")
    try:
        return _build(kind, desc, where)
    except ConfigError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(where, str(exc)) from None


def _values(desc, where):
    vals = _sub(desc, "values", where)
    if not isinstance(vals, list):
        raise ConfigError(f"{where}.values", "expected a list")
    return [_number(v, f"{where}.values[{i}]") for i, v in enumerate(vals)]


def _build(kind: str, desc: dict, where: str) -> Sequence:
    scale = _number(desc.get("scale", 1), f"{where}.scale")
    if kind == "finite-support":
        return sq.finite(_values(desc, where))
    if kind == "geometric":
        return sq.geometric(_positive(_sub(desc, "ratio", where), f"{where}.ratio"), scale)
    if kind == "polynomial-power":
        return sq.polynomial_power(_number(_sub(desc, "exponent", where), f"{where}.exponent", real=True), scale)
    if kind == "sqrt-index":
        return sq.sqrt_index()
    if kind == "constant":
        return sq.constant(_number(_sub(desc, "value", where), f"{where}.value"))
    if kind == "index":
        return sq.index_power(_number(desc.get("exponent", 1), f"{where}.exponent", real=True))
    if kind == "tabulated":
        tail = desc.get("tail")
        tail = None if tail is None else build_sequence(tail, f"{where}.tail")
        ann = desc.get("annotation")
        if ann is not None:
            ann = _annotation(ann, f"{where}.annotation")
        return sq.tabulated(_values(desc, where), tail, ann)
    if kind == "product":
        fs = _sub(desc, "factors", where)
        if not isinstance(fs, list) or not fs:
            raise ConfigError(f"{where}.factors", "expected a nonempty list")
        return sq.prod(*(build_sequence(f, f"{where}.factors[{i}]") for i, f in enumerate(fs)))
    if kind == "sum":
        terms = _sub(desc, "terms", where)
        if not isinstance(terms, list) or not terms:
            raise ConfigError(f"{where}.terms", "expected a nonempty list")
        pairs = []
        for i, t in enumerate(terms):
            w = f"{where}.terms[{i}]"
            if not isinstance(t, dict) or "of" not in t:
                raise ConfigError(w, "expected {\"coef\": c, \"of\": descriptor}")
            pairs.append((_number(t.get("coef", 1), f"{w}.coef"), build_sequence(t["of"], f"{w}.of")))
        return sq.add_all(pairs)
    inner = build_sequence(_sub(desc, "of", where), f"{where}.of")
    if kind == "shift":
        k = desc.get("by", 1)
        if not isinstance(k, int) or isinstance(k, bool):
            raise ConfigError(f"{where}.by", "expected an integer")
        return sq.shift(inner, k)
    if kind == "conjugate":
        return sq.conjugate(inner)
    if kind == "reciprocal":
        return sq.reciprocal(inner)
    return sq.Unannotated(inner)


def _annotation(d, where) -> GrowthAnnotation:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    return GrowthAnnotation(
        _number(d.get("ratio", 1), f"{where}.ratio", real=True),
        _number(d.get("exponent", 0), f"{where}.exponent", real=True),
        float(_positive(d.get("constant", 1), f"{where}.constant")),
        bool(d.get("exact", False)),
    )


# ---------------------------------------------------------------------------
# scenario


_OPS = {"H": "diagonal", "A": "lower", "B": "raise"}
_FORMS = ("conjugated", "formal-series")

# defaults double as the schema: value types and allowed keys per check
CHECK_DEFAULTS: dict[str, dict] = {
    "biorthogonality": {"N": 64, "tolerance": 1e-12},
    "ladder": {"N": 64, "tolerance": 1e-12},
    "commutator": {"N": 32, "vectors": 100, "tolerance": 1e-12},
    "membership": {"operator": "H", "form": "conjugated", "dagger": False, "candidates": None, "expect": None},
    "compare-domains": {"operator": "H", "a": "conjugated", "b": "formal-series", "candidates": None,
                        "expect": None},
    "lemma22": {"order": 8, "count": 1},
    "riesz-consistency": {"order": 8, "matrix": "hermitian-positive", "tolerance": 1e-10},
    "hermite-demo": {"nmax": 20, "N": 16, "csv": None, "sample_index": 3},
    "closedness-witness": {"operator": "H", "dagger": False, "expect": None},
}
_CHOICES = {
    "operator": tuple(_OPS),
    "form": _FORMS,
    "a": _FORMS,
    "b": _FORMS,
    "matrix": ("hermitian-positive", "invertible", "diagonal"),
}


def _check_param(name: str, key: str, value, default, where: str):
    if key in _CHOICES:
        if value not in _CHOICES[key]:
            raise ConfigError(where, f"expected one of {list(_CHOICES[key])}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(where, "expected a boolean")
        return value
    if isinstance(default, int):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(where, "expected a positive integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError(where, "expected a positive number")
        return float(value)
    if key == "csv":
        if value is not None and not isinstance(value, str):
            raise ConfigError(where, "expected a path string")
        return value
    if key == "candidates":
        if value is not None and (not isinstance(value, list)
                                  or not all(isinstance(i, int) and not isinstance(i, bool) for i in value)):
            raise ConfigError(where, "expected a list of candidate indices")
        return value
    if key == "expect":
        return _check_expect(name, value, where)
    return value


def _check_expect(name: str, value, where: str):
    if value is None:
        return None
    if name == "membership":
        ok = isinstance(value, list) and all(v in [o.value for o in Outcome] for v in value)
        if not ok:
            raise ConfigError(where, "expected a list of Converges/Diverges/Inconclusive")
    elif name == "compare-domains":
        keys = {"in_a_only", "in_b_only", "in_both", "in_neither", "undecided"}
        if not isinstance(value, dict) or not set(value) <= keys:
            raise ConfigError(where, f"expected an object with keys among {sorted(keys)}")
    elif name == "closedness-witness":
        if value not in ("witness", "none"):
            raise ConfigError(where, "expected 'witness' or 'none'")
    return value


@dataclass(frozen=True)
class CheckSpec:
    name: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": copy.deepcopy(self.params)}

    @classmethod
    def from_dict(cls, d, where: str = "check") -> "CheckSpec":
        if not isinstance(d, dict):
            raise ConfigError(where, "check must be an object")
        name = d.get("name")
        if name not in CHECK_DEFAULTS:
            raise ConfigError(f"{where}.name", f"unknown check {name!r}")
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params", "expected an object")
        defaults = CHECK_DEFAULTS[name]
        unknown = set(params) - set(defaults)
        if unknown:
            raise ConfigError(f"{where}.params", f"unknown parameters {sorted(unknown)}")
        full = {}
        for key, default in defaults.items():
            value = params.get(key, default)
            full[key] = _check_param(name, key, value, default, f"{where}.params.{key}")
        return cls(name, full)


DEFAULT_SCALE = {"kind": "constant", "value": 1}
DEFAULT_ALPHA = {"kind": "sqrt-index"}


@dataclass(frozen=True)
class Scenario:
    scale: dict = field(default_factory=lambda: dict(DEFAULT_SCALE))
    alpha: dict = field(default_factory=lambda: dict(DEFAULT_ALPHA))
    candidates: tuple = ()
    checks: tuple = ()

    def to_dict(self) -> dict:
        return {
            "scale": copy.deepcopy(self.scale),
            "alpha": copy.deepcopy(self.alpha),
            "candidates": [copy.deepcopy(c) for c in self.candidates],
            "checks": [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, d) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("scenario", "top level must be an object")
        unknown = set(d) - {"scale", "alpha", "candidates", "checks"}
        if unknown:
            raise ConfigError("scenario", f"unknown fields {sorted(unknown)}")
        scale = d.get("scale", dict(DEFAULT_SCALE))
        alpha = d.get("alpha", dict(DEFAULT_ALPHA))
        cands = d.get("candidates", [])
        checks = d.get("checks", [])
        if not isinstance(cands, list):
            raise ConfigError("candidates", "expected a list")
        if not isinstance(checks, list):
            raise ConfigError("checks", "expected a list")
        s = cls(copy.deepcopy(scale), copy.deepcopy(alpha), tuple(copy.deepcopy(cands)),
                tuple(CheckSpec.from_dict(c, f"checks[{i}]") for i, c in enumerate(checks)))
        s.resolve()
        return s

    def resolve(self):
        """Build every referenced sequence; raises ConfigError on failure."""
        t = build_sequence(self.scale, "scale")
        try:
            scale = ScaleOperator(t)
        except ValueError as exc:
            raise ConfigError("scale", str(exc)) from None
        alpha = build_sequence(self.alpha, "alpha")
        cands = [build_sequence(c, f"candidates[{i}]") for i, c in enumerate(self.candidates)]
        for i, c in enumerate(self.checks):
            for j in c.params.get("candidates") or []:
                if not 0 <= j < len(cands):
                    raise ConfigError(f"checks[{i}].params.candidates", f"index {j} out of range")
        return scale, alpha, cands


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class CheckRecord:
    name: str
    parameters: dict
    outcome: str
    evidence: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "parameters": self.parameters, "outcome": self.outcome,
                "evidence": self.evidence}


@dataclass(frozen=True)
class Report:
    records: tuple
    version: str = __version__

    @property
    def summary(self) -> dict:
        counts = {"pass": 0, "fail": 0, "inconclusive": 0}
        for r in self.records:
            counts[r.outcome] += 1
        return counts

    @property
    def exit_code(self) -> int:
        return 1 if self.summary["fail"] else 0

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "tool": {"name": TOOL_NAME, "version": self.version},
            "summary": self.summary,
            "records": [r.to_dict() for r in self.records],
        }


def _clean_json(x):
    """Reduce numpy scalars, complex numbers and Fractions to JSON types."""
    if isinstance(x, dict):
        return {str(k): _clean_json(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean_json(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean_json(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        return [_finite(z.real), _finite(z.imag)] if z.imag else _finite(z.real)
    if isinstance(x, (float, np.floating)):
        return _finite(float(x))
    return x


def _finite(v: float):
    return v if math.isfinite(v) else str(v)


# ---------------------------------------------------------------------------
# checks


@dataclass
class _Context:
    scale: ScaleOperator
    alpha: Sequence
    candidates: list
    seed: int
    tolerance_scale: float


def _outcome(ok: bool) -> str:
    return "pass" if ok else "fail"


def _check_biorthogonality(ctx, p, rng):
    tol = p["tolerance"] * ctx.tolerance_scale
    err = biorthogonality_check(ctx.scale, p["N"])
    return _outcome(err <= tol), {"max_error": err, "tolerance": tol}


def _check_ladder(ctx, p, rng):
    tol = p["tolerance"] * ctx.tolerance_scale
    errs = ladder_relations(ctx.scale, ctx.alpha, p["N"])
    bad = {k: v for k, v in errs.items() if v > tol}
    return _outcome(not bad), {"errors": errs, "violations": bad, "tolerance": tol}


def _check_commutator(ctx, p, rng):
    tol = p["tolerance"] * ctx.tolerance_scale
    A = make_operator("lower", ctx.alpha, ctx.scale)
    B = make_operator("raise", ctx.alpha, ctx.scale)
    C = commutator(A, B)
    bands = {str(d): [complex(v) for v in w.values(min(p["N"], 8))] for d, w in C.bands}
    identity = is_identity(C)
    worst = 0.0
    for _ in range(p["vectors"]):
        k = int(rng.integers(1, p["N"] + 1))
        x = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        out = apply(C, sq.finite(x.tolist()), p["N"] + 2)
        ref = np.zeros(p["N"] + 2, dtype=complex)
        ref[:k] = x
        worst = max(worst, float(np.max(np.abs(out - ref)) / np.max(np.abs(x))))
    ok = identity and worst <= tol
    return _outcome(ok), {"identity_band": identity, "band_prefix": bands, "max_apply_error": worst,
                          "tolerance": tol}


def _operator(ctx, p, form=None, dagger=None):
    return make_operator(_OPS[p["operator"]], ctx.alpha, ctx.scale,
                         Form(form or p.get("form", "conjugated")),
                         p.get("dagger", False) if dagger is None else dagger)


def _selected(ctx, p):
    idx = p.get("candidates")
    return list(range(len(ctx.candidates))) if idx is None else list(idx)


def _check_membership(ctx, p, rng):
    op = _operator(ctx, p)
    idx = _selected(ctx, p)
    reports = [membership(op, ctx.candidates[i]) for i in idx]
    outcomes = [r.overall.outcome.value for r in reports]
    evidence = {"operator": op.name, "candidates": idx, "outcomes": outcomes,
                "reports": [r.to_dict() for r in reports]}
    if p["expect"] is not None:
        if len(p["expect"]) != len(outcomes):
            raise CheckError("expect must list one outcome per selected candidate")
        return _outcome(outcomes == p["expect"]), {**evidence, "expected": p["expect"]}
    if Outcome.INCONCLUSIVE.value in outcomes:
        return "inconclusive", evidence
    return "pass", evidence


def _check_compare(ctx, p, rng):
    a = _operator(ctx, p, form=p["a"], dagger=False)
    b = _operator(ctx, p, form=p["b"], dagger=False)
    idx = _selected(ctx, p)
    cmp = compare_domains(a, b, [ctx.candidates[i] for i in idx])
    groups = {k: [idx[j] for j in v] for k, v in cmp.to_dict().items() if k not in ("a", "b")}
    evidence = {"a": cmp.a, "b": cmp.b, **groups}
    if p["expect"] is not None:
        ok = all(sorted(groups[k]) == sorted(v) for k, v in p["expect"].items())
        return _outcome(ok), {**evidence, "expected": p["expect"]}
    if groups["undecided"]:
        return "inconclusive", evidence
    return "pass", evidence


def _check_lemma22(ctx, p, rng):
    reports = []
    for _ in range(p["count"]):
        reports.append(lemma22_check(random_invertible(p["order"], rng)))
    ok = all(r.passed(ctx.tolerance_scale) for r in reports)
    worst = {k: max(getattr(r, k) for r in reports)
             for k in ("polar_residual", "phi_residual", "psi_residual", "orthonormality", "biorthogonality")}
    return _outcome(ok), {"order": p["order"], "count": p["count"], "worst": worst}


def _check_riesz(ctx, p, rng):
    kind = p["matrix"]
    if kind == "diagonal":
        T = truncate(ctx.scale, p["order"]).data
    elif kind == "invertible":
        T = random_invertible(p["order"], rng)
    else:
        T = random_hermitian_positive(p["order"], rng)
    rep = riesz_consistency_check(T, ctx.alpha, tol=p["tolerance"] * ctx.tolerance_scale)
    return _outcome(rep.passed), rep.to_dict()


def _check_hermite(ctx, p, rng):
    rep = hermite_demo(p["nmax"], p["N"], p["csv"], p["sample_index"], ctx.tolerance_scale)
    return _outcome(rep.passed), rep.to_dict()


def _check_witness(ctx, p, rng):
    op = _operator(ctx, p, form="conjugated")
    w = closedness_witness(op)
    evidence = {"operator": op.name, "found": w is not None}
    if w is not None:
        evidence["witness"] = w.to_dict()
    if p["expect"] is None:
        return "pass", evidence
    return _outcome((w is not None) == (p["expect"] == "witness")), {**evidence, "expected": p["expect"]}


_RUNNERS = {
    "biorthogonality": _check_biorthogonality,
    "ladder": _check_ladder,
    "commutator": _check_commutator,
    "membership": _check_membership,
    "compare-domains": _check_compare,
    "lemma22": _check_lemma22,
    "riesz-consistency": _check_riesz,
    "hermite-demo": _check_hermite,
    "closedness-witness": _check_witness,
}


def run_scenario(scenario: Scenario, seed: int = 0, tolerance_scale: float = 1.0) -> Report:
    """Execute every check in order; checks draw randomness from (seed, index)."""
    if not tolerance_scale > 0:
        raise ConfigError("tolerance-scale", "must be positive")
    scale, alpha, cands = scenario.resolve()
    ctx = _Context(scale, alpha, cands, seed, tolerance_scale)
    records = []
    for i, check in enumerate(scenario.checks):
        rng = np.random.default_rng([seed, i])
        try:
            outcome, evidence = _RUNNERS[check.name](ctx, check.params, rng)
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            raise CheckError(f"check {i} ({check.name}) failed: {exc}") from exc
        records.append(CheckRecord(check.name, _clean_json(check.params), outcome, _clean_json(evidence)))
    return Report(tuple(records))
