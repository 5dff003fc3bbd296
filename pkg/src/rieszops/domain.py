"""Domain membership for the conjugated and formal-series operator forms.

Every condition reduces to one question: is a coefficient sequence square
summable?  Annotated sequences get an exact answer from their growth envelope.
Unannotated ones go through :func:`probe_l2`, which only answers when a
comparison series closes the tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import seq as sq
from .operators import CORES, Form, OperatorSpec, ScaleMismatchError, Vector, _bounded_from, _coeffs, image
from .seq import Outcome, Sequence, Verdict

PROBE_DEPTHS = (2**10, 2**14, 2**17)
PAIRING_TOL = 1e-10
# exponent of the p-series used as the convergent comparison
_PSERIES_EXPONENT = 1.05


# ---------------------------------------------------------------------------
# numeric probe


def _window(a: np.ndarray, N: int) -> np.ndarray:
    return a[N // 2 : N]


def _max_ratio(w: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = w[1:] / w[:-1]
    if not np.all(np.isfinite(r)):
        return float("nan")
    return float(r.max())


def probe_l2(s: Sequence, depths: tuple = PROBE_DEPTHS) -> Verdict:
    """Partial-sum probe for a sequence without a usable annotation.

    Convergence needs a comparison that holds on the last half-window at the
    two deepest levels and does not get worse between them: either a uniform
    ratio bound ``q < 1`` (geometric tail) or a nonincreasing envelope
    ``|c_n|^2 (n+1)^1.05`` (p-series tail).  Divergence needs ``(n+1)|c_n|^2``
    bounded below by a constant that does not shrink (harmonic comparison).
    Anything else is Inconclusive.
    """
    top = max(depths)
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.abs(s.values(top)) ** 2
        sums = {str(N): float(np.sum(a[:N])) for N in depths}
    n = np.arange(top, dtype=float)
    evidence: dict = {"rule": "probe", "depths": list(depths), "partial_sums": sums}
    if np.any(np.isnan(a)):
        return Verdict(Outcome.INCONCLUSIVE, {**evidence, "reason": "nan coefficients"})
    lo, hi = sorted(depths)[-2:]

    wl, wh = _window(a, lo), _window(a, hi)
    if not wl.any() and not wh.any():
        return Verdict(Outcome.CONVERGES, {**evidence, "comparison": "vanishing", "tail_bound": 0.0})

    ql, qh = _max_ratio(wl), _max_ratio(wh)
    evidence["ratio_estimates"] = {str(lo): ql, str(hi): qh}
    if np.isfinite(qh) and qh < 1 and qh <= ql + 1e-12:
        tail = float(a[hi - 1] * qh / (1 - qh))
        return Verdict(Outcome.CONVERGES, {**evidence, "comparison": "geometric", "tail_bound": tail})

    beta = _PSERIES_EXPONENT
    with np.errstate(over="ignore", invalid="ignore"):
        env = a * (n + 1) ** beta
    ml, mh = float(np.max(_window(env, lo))), float(np.max(_window(env, hi)))
    evidence["pseries_envelope"] = {str(lo): ml, str(hi): mh}
    if np.isfinite(mh) and mh <= ml:
        tail = mh * (hi / 2) ** (1 - beta) / (beta - 1)
        return Verdict(Outcome.CONVERGES, {**evidence, "comparison": "p-series", "tail_bound": tail})

    with np.errstate(over="ignore", invalid="ignore"):
        harm = a * (n + 1)
    kl, kh = float(np.min(_window(harm, lo))), float(np.min(_window(harm, hi)))
    evidence["harmonic_floor"] = {str(lo): kl, str(hi): kh}
    if kh > 0 and kh >= kl * (1 - 1e-12):
        return Verdict(Outcome.DIVERGES, {**evidence, "comparison": "harmonic"})
    return Verdict(Outcome.INCONCLUSIVE, evidence)


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class Condition:
    name: str
    description: str
    verdict: Verdict
    series: Sequence | None = field(default=None, compare=False, repr=False)


def _overall(verdicts) -> Verdict:
    verdicts = list(verdicts)
    if any(v.diverges for v in verdicts):
        return Verdict(Outcome.DIVERGES, {"rule": "conjunction"})
    if all(v.converges for v in verdicts):
        return Verdict(Outcome.CONVERGES, {"rule": "conjunction"})
    return Verdict(Outcome.INCONCLUSIVE, {"rule": "conjunction"})


@dataclass(frozen=True)
class MembershipReport:
    operator: str
    conditions: tuple

    @property
    def overall(self) -> Verdict:
        return _overall(c.verdict for c in self.conditions)

    @property
    def member(self) -> bool:
        return self.overall.converges

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "overall": self.overall.outcome.value,
            "conditions": [
                {"name": c.name, "description": c.description, "outcome": c.verdict.outcome.value,
                 "evidence": _jsonable(c.verdict.evidence)}
                for c in self.conditions
            ],
        }


def _jsonable(ev: dict) -> dict:
    out = {}
    for k, v in ev.items():
        if isinstance(v, np.ndarray):
            v = [complex(x) if np.iscomplexobj(v) else float(x) for x in v]
        out[k] = v
    return out


def _core_image(op: OperatorSpec, y: Sequence) -> Sequence:
    return sq.add_all([(1, sq.prod(c, sq.shift(y, d))) for d, c in op.core_bands])


def _simple_conditions(op: OperatorSpec, xi: Sequence) -> list[Condition]:
    if op.form is Form.FORMAL_SERIES:
        img = image(op, xi)
        return [Condition("S1", "series of weighted rank-one terms exists in H", sq.l2_summable(img), img)]
    s = op.conjugator
    inv, fwd = ("T^-1", "T") if not op.dagger else ("T", "T^-1")
    y = sq.prod(xi, sq.reciprocal(s))
    z = _core_image(op, y)
    w = sq.prod(s, z)
    return [
        Condition("C1", f"xi in D({inv})", sq.l2_summable(y), y),
        Condition("C2", f"core series on {inv} xi exists in H", sq.l2_summable(z), z),
        # the weak-convergence characterization coincides with this one here
        Condition("C3", f"core series belongs to D({fwd}) (weak form coincides)", sq.l2_summable(w), w),
    ]


def _conditions(op: OperatorSpec, xi: Sequence) -> list[Condition]:
    if op.core in CORES:
        return _simple_conditions(op, xi)
    if op.core == "product":
        outer, inner = op.parts
        first = [_prefixed(inner, c) for c in _conditions(inner, xi)]
        second = [_prefixed(outer, c) for c in _conditions(outer, image(inner, xi))]
        return first + second
    if op.core == "difference":
        out = []
        for part in op.parts:
            out.extend(_prefixed(part, c) for c in _conditions(part, xi))
        return out
    raise ValueError(f"cannot decide membership for core {op.core!r}")


def _prefixed(op: OperatorSpec, c: Condition) -> Condition:
    return Condition(f"{op.name}:{c.name}", c.description, c.verdict, c.series)


def membership(op: OperatorSpec, xi) -> MembershipReport:
    """Decide whether ``xi`` lies in the domain of ``op``.

    Conjugated operators check the chain C1 (xi in D(S^-1)), C2 (the core
    series exists) and C3 (its image lies in D(S)), with S = T, or T^-1 for a
    dagger.  Formal-series operators check the single condition S1.  Products
    check the inner operator on xi and then the outer one on its image;
    differences need both parts.
    """
    return MembershipReport(op.name, tuple(_conditions(op, _coeffs(xi))))


@dataclass(frozen=True)
class DomainComparison:
    a: str
    b: str
    in_a_only: tuple
    in_b_only: tuple
    in_both: tuple
    in_neither: tuple
    undecided: tuple

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "in_a_only": list(self.in_a_only),
            "in_b_only": list(self.in_b_only),
            "in_both": list(self.in_both),
            "in_neither": list(self.in_neither),
            "undecided": list(self.undecided),
        }


def compare_domains(a: OperatorSpec, b: OperatorSpec, candidates) -> DomainComparison:
    """Partition candidate indices by membership in D(a) and D(b)."""
    if a.scale != b.scale:
        raise ScaleMismatchError("operators are built on different scale operators")
    if a.core != b.core:
        raise ValueError("domain comparison needs operators with the same core")
    groups: dict[str, list] = {k: [] for k in ("a", "b", "both", "neither", "undecided")}
    for i, xi in enumerate(candidates):
        va, vb = membership(a, xi).overall, membership(b, xi).overall
        if va.outcome is Outcome.INCONCLUSIVE or vb.outcome is Outcome.INCONCLUSIVE:
            groups["undecided"].append(i)
        elif va.converges and vb.converges:
            groups["both"].append(i)
        elif va.converges:
            groups["a"].append(i)
        elif vb.converges:
            groups["b"].append(i)
        else:
            groups["neither"].append(i)
    return DomainComparison(a.name, b.name, tuple(groups["a"]), tuple(groups["b"]), tuple(groups["both"]),
                            tuple(groups["neither"]), tuple(groups["undecided"]))


# ---------------------------------------------------------------------------
# weak convergence


def series_partial_sums(op: OperatorSpec, xi, counts) -> list[Vector]:
    """Partial sums S(core truncated to the first k terms) S^-1 xi, as Vectors.

    For the diagonal core these are the vectors whose weak limit appears in the
    domain discussion; for shift cores the truncation keeps output indices < k.
    """
    if op.core not in CORES or op.conjugator is None:
        raise ValueError("partial sums are defined for simple conjugated operators")
    x = _coeffs(xi)
    out = []
    for k in counts:
        vals = _core_image(op, sq.prod(x, sq.reciprocal(op.conjugator))).values(k)
        s = op.conjugator.values(k)
        out.append(Vector(sq.finite([complex(v) for v in s * vals])))
    return out


def _support(v: Vector) -> int | None:
    c = v.coeffs
    if isinstance(c, sq.Finite):
        return len(c)
    return None


def weak_convergence_probe(partial_sums, test_vectors, tol: float = PAIRING_TOL,
                           span: int = 32) -> Verdict:
    """Probe weak convergence of ``partial_sums`` against ``test_vectors``.

    Returns Converges (with the coordinate-wise limit ``eta`` in the evidence)
    when every pairing and every coordinate settles within ``tol`` over the last
    quarter of the sequence.  Never returns Diverges.
    """
    sums = [v if isinstance(v, Vector) else Vector(_coeffs(v)) for v in partial_sums]
    tests = [v if isinstance(v, Vector) else Vector(_coeffs(v)) for v in test_vectors]
    if len(sums) < 2:
        raise ValueError("need at least two partial sums")
    block = np.array([t.take(span) for t in tests]) if tests else np.zeros((0, span))
    if block.shape[0] == 0 or np.linalg.matrix_rank(block) < span:
        raise ValueError(f"test vectors must span the first {span} coordinates")

    sizes = [_support(v) for v in sums]
    M = max([s for s in sizes if s is not None] + [span]) if None not in sizes else 2**10
    S = np.array([v.take(M) for v in sums])
    V = np.array([t.take(M) for t in tests])
    pairings = S @ V.conj().T

    tail = max(2, len(sums) // 4)
    drift_pair = float(np.max(np.abs(pairings[-tail:] - pairings[-1])))
    drift_coord = float(np.max(np.abs(S[-tail:] - S[-1])))
    evidence = {"rule": "weak-probe", "tail_window": tail, "pairing_drift": drift_pair,
                "coordinate_drift": drift_coord, "tolerance": tol}
    if drift_pair <= tol and drift_coord <= tol:
        return Verdict(Outcome.CONVERGES, {**evidence, "eta": S[-1].copy()})
    return Verdict(Outcome.INCONCLUSIVE, evidence)


# ---------------------------------------------------------------------------
# non-closedness witness


WITNESS_LEVELS = tuple(2**j for j in range(3, 17))
_WITNESS_DEPTH = 2**17


@dataclass(frozen=True)
class Witness:
    """Graph-limit escape: xi^(k) -> xi and op xi^(k) -> eta, yet xi is not in D(op)."""

    operator: str
    limit: Vector
    image_limit: Sequence
    levels: tuple
    input_residuals: tuple
    image_residuals: tuple
    report: MembershipReport
    statement: str

    def truncation(self, k: int) -> Vector:
        return Vector(sq.finite([complex(v) for v in self.limit.take(k)]))

    @property
    def truncations(self) -> list[Vector]:
        return [self.truncation(k) for k in self.levels]

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "levels": list(self.levels),
            "input_residuals": list(self.input_residuals),
            "image_residuals": list(self.image_residuals),
            "membership": self.report.to_dict(),
            "statement": self.statement,
        }


def _band_apply(op: OperatorSpec, x: np.ndarray) -> np.ndarray:
    D = len(x)
    m = np.arange(D)
    out = np.zeros(D, dtype=complex)
    for d, w in op.bands:
        idx = m + d
        ok = (idx >= 0) & (idx < D)
        wv = w.values(D)
        contrib = np.zeros(D, dtype=complex)
        with np.errstate(invalid="ignore", over="ignore"):
            contrib[ok] = np.where(x[idx[ok]] != 0, wv[ok] * x[idx[ok]], 0)
        out += contrib
    return out


def _tail_norms(x: np.ndarray, levels) -> np.ndarray:
    sq_abs = np.abs(x) ** 2
    rev = np.cumsum(sq_abs[::-1])[::-1]
    return np.sqrt(np.array([rev[k] if k < len(x) else 0.0 for k in levels]))


def _certified(res: np.ndarray, scale: float) -> bool:
    return bool(np.all(np.diff(res) <= 1e-12 * max(scale, 1.0)) and res[-1] <= 1e-2 * max(scale, 1e-300))


def closedness_witness(op: OperatorSpec) -> Witness | None:
    """Construct a vector escaping the graph closure of a conjugated operator.

    Applies when the conjugating sequence s is bounded and 1/s is unbounded:
    T bounded with unbounded inverse for the plain operators, the mirror for
    daggers.  Candidates are xi = s*g with g not square summable; a witness
    needs xi in H, xi outside D(op) and a square-summable formal image.
    Returns None when the regime does not apply or no candidate certifies.
    """
    if op.core not in CORES or op.form is not Form.CONJUGATED or op.conjugator is None:
        return None
    s = op.conjugator

    if _bounded_from(s.growth()) is not True or _bounded_from(sq.reciprocal(s).growth()) is not False:
        return None

    for g in (sq.constant(1), sq.polynomial_power(-0.5)):
        xi = sq.prod(s, g)
        if not sq.l2_summable(xi).converges:
            continue
        report = membership(op, xi)
        if not report.conditions[0].verdict.diverges:
            continue
        eta = image(op, xi)
        if not sq.l2_summable(eta).converges:
            continue
        x = xi.values(_WITNESS_DEPTH)
        full = _band_apply(op, x)
        in_res, img_res = [], []
        for k in WITNESS_LEVELS:
            xk = x.copy()
            xk[k:] = 0
            in_res.append(float(np.linalg.norm(x - xk)))
            img_res.append(float(np.linalg.norm(full - _band_apply(op, xk))))
        in_res, img_res = np.array(in_res), np.array(img_res)
        if not (_certified(in_res, float(np.linalg.norm(x))) and _certified(img_res, float(np.linalg.norm(full)))):
            continue
        return Witness(op.name, Vector(xi), eta, WITNESS_LEVELS, tuple(in_res.tolist()), tuple(img_res.tolist()), report,
                       f"xi lies outside D({op.name}) although (xi^(k), {op.name} xi^(k)) converges in the graph norm")
    return None
