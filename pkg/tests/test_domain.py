from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rieszops import seq as sq
from rieszops.domain import (
    PROBE_DEPTHS,
    closedness_witness,
    compare_domains,
    membership,
    probe_l2,
    series_partial_sums,
    weak_convergence_probe,
)
from rieszops.operators import Form, ScaleMismatchError, ScaleOperator, Vector, basis_vectors, compose, make_operator
from rieszops.seq import Outcome

HALF = Fraction(1, 2)
CORE_ALPHA = {"diagonal": lambda: sq.index_power(1), "lower": sq.sqrt_index, "raise": sq.sqrt_index}


def pair(core, t, alpha=None, dagger=False):
    s = ScaleOperator(t)
    a = alpha if alpha is not None else CORE_ALPHA[core]()
    return (make_operator(core, a, s, Form.CONJUGATED, dagger),
            make_operator(core, a, s, Form.FORMAL_SERIES, dagger))


def partial_sum_oracle(a_fn, depth):
    """Independent block sums of |a_n|^2 over dyadic blocks [2^j, 2^(j+1))."""
    n = np.arange(depth, dtype=float)
    terms = a_fn(n)
    edges = [2**j for j in range(int(np.log2(depth)) + 1)]
    return np.array([terms[lo:hi].sum() for lo, hi in zip(edges[:-1], edges[1:])])


# ---------------------------------------------------------------------------
# membership examples


def test_separation_example():
    conj, formal = pair("diagonal", sq.geometric(HALF), sq.constant(1))
    xi = sq.geometric(HALF)
    rc, rf = membership(conj, xi), membership(formal, xi)
    assert [c.name for c in rc.conditions] == ["C1", "C2", "C3"]
    assert rc.conditions[0].verdict.diverges and rc.overall.diverges
    assert [c.name for c in rf.conditions] == ["S1"] and rf.overall.converges

    # oracle: |xi_n / t_n|^2 = 1 on every index, block sums double
    blocks = partial_sum_oracle(lambda n: np.exp2(2 * (-n - (-n))), 2**12)
    assert np.all(np.diff(blocks) > 0)
    # oracle: |image|^2 = 4^-n, a geometric series with sum 4/3
    img = partial_sum_oracle(lambda n: 4.0**-n, 2**12)
    assert img.sum() + 1 == pytest.approx(4 / 3, rel=1e-12)


@pytest.mark.parametrize("core", ["diagonal", "lower", "raise"])
@pytest.mark.parametrize("t", [sq.geometric(2), sq.geometric(HALF), sq.polynomial_power(3)])
@pytest.mark.parametrize("dagger", [False, True])
def test_finite_support_always_member(core, t, dagger):
    xi = sq.finite([1, -2j, 0.5, 0, 3])
    for op in pair(core, t, dagger=dagger):
        rep = membership(op, xi)
        assert all(c.verdict.converges for c in rep.conditions), rep.to_dict()


def test_riesz_example():
    t = sq.tabulated([1, 2])
    xi = sq.polynomial_power(-2)
    conj, formal = pair("diagonal", t)
    assert membership(conj, xi).overall.outcome is membership(formal, xi).overall.outcome is Outcome.CONVERGES


def test_overall_is_conjunction():
    conj, _ = pair("diagonal", sq.geometric(2), sq.constant(1))
    rep = membership(conj, sq.Unannotated(sq.polynomial_power(-0.5)))
    outcomes = [c.verdict.outcome for c in rep.conditions]
    want = (Outcome.DIVERGES if Outcome.DIVERGES in outcomes
            else Outcome.CONVERGES if all(o is Outcome.CONVERGES for o in outcomes) else Outcome.INCONCLUSIVE)
    assert rep.overall.outcome is want


def test_product_membership_checks_both_stages():
    s = ScaleOperator(sq.geometric(2))
    A = make_operator("lower", sq.sqrt_index(), s)
    B = make_operator("raise", sq.sqrt_index(), s)
    rep = membership(compose(A, B), sq.geometric(Fraction(1, 8)))
    assert len(rep.conditions) == 6
    assert all(c.name.startswith(("B:", "A:")) for c in rep.conditions)


def test_report_to_dict():
    conj, _ = pair("diagonal", sq.geometric(HALF), sq.constant(1))
    d = membership(conj, sq.geometric(HALF)).to_dict()
    assert d["overall"] == Outcome.DIVERGES.value
    assert d["conditions"][0]["outcome"] == Outcome.DIVERGES.value


# ---------------------------------------------------------------------------
# compare_domains


def test_compare_domains_separation():
    conj, formal = pair("diagonal", sq.geometric(HALF), sq.constant(1))
    cmp = compare_domains(conj, formal, [sq.geometric(HALF), sq.finite([1, 2])])
    assert cmp.in_b_only == (0,) and cmp.in_both == (1,)
    assert cmp.in_a_only == () and cmp.undecided == ()


def test_compare_identical_ops():
    conj, _ = pair("lower", sq.geometric(2))
    cands = [sq.geometric(Fraction(1, 3)), sq.polynomial_power(-3), sq.finite([1]), sq.polynomial_power(-1)]
    cmp = compare_domains(conj, conj, cands)
    decided = sorted(cmp.in_both + cmp.in_neither)
    assert cmp.in_a_only == cmp.in_b_only == ()
    assert sorted(decided + list(cmp.undecided)) == list(range(len(cands)))


def test_compare_rejects_mismatch():
    a, _ = pair("diagonal", sq.geometric(2))
    b, _ = pair("diagonal", sq.geometric(3))
    c, _ = pair("lower", sq.geometric(2))
    with pytest.raises(ScaleMismatchError):
        compare_domains(a, b, [])
    with pytest.raises(ValueError):
        compare_domains(a, c, [])


def test_compare_unbounded_t_random_candidates():
    rng = np.random.default_rng(7)
    conj, formal = pair("diagonal", sq.geometric(2), sq.constant(1))
    cands = []
    for _ in range(20):
        r = Fraction(int(rng.integers(1, 12)), 12)
        p = Fraction(-int(rng.integers(1, 8)), 2)
        cands.append(sq.prod(sq.geometric(r), sq.polynomial_power(p)))
    cmp = compare_domains(conj, formal, cands)
    assert cmp.in_b_only == ()


# ---------------------------------------------------------------------------
# regime properties


@st.composite
def annotated_vectors(draw):
    kind = draw(st.sampled_from(["geometric", "power", "mixed", "tabulated"]))
    if kind == "geometric":
        r = Fraction(draw(st.integers(1, 30)), 20)
        return sq.geometric(r, draw(st.sampled_from([1, -1, 1j, 2])))
    p = Fraction(draw(st.integers(-8, 2)), 4)
    if kind == "power":
        return sq.polynomial_power(p, draw(st.sampled_from([1, 3, -1j])))
    if kind == "mixed":
        r = Fraction(draw(st.integers(10, 25)), 20)
        return sq.prod(sq.geometric(r), sq.polynomial_power(p))
    head = draw(st.lists(st.integers(-3, 3), min_size=1, max_size=4))
    return sq.tabulated(head, tail=sq.polynomial_power(p))


RIESZ_SCALES = [sq.tabulated([1, 2]), sq.add(sq.constant(2), sq.polynomial_power(-1)), sq.constant(3)]
INV_BOUNDED_SCALES = [sq.geometric(2), sq.polynomial_power(1), sq.polynomial_power(HALF), sq.tabulated([1, 2])]


@settings(max_examples=50)
@given(annotated_vectors(), st.sampled_from(RIESZ_SCALES), st.sampled_from(["diagonal", "lower", "raise"]),
       st.booleans())
def test_riesz_regime_forms_agree(xi, t, core, dagger):
    conj, formal = pair(core, t, dagger=dagger)
    assert membership(conj, xi).overall.outcome is membership(formal, xi).overall.outcome


@settings(max_examples=50)
@given(annotated_vectors(), st.sampled_from(INV_BOUNDED_SCALES), st.sampled_from(["diagonal", "lower", "raise"]))
def test_bounded_inverse_never_separates(xi, t, core):
    conj, formal = pair(core, t)
    c, f = membership(conj, xi).overall, membership(formal, xi).overall
    assert not (f.converges and c.diverges)


@given(st.integers(-8, 2), st.integers(0, 8), st.integers(10, 20),
       st.sampled_from(["diagonal", "lower", "raise"]), st.sampled_from(INV_BOUNDED_SCALES + RIESZ_SCALES),
       st.sampled_from(list(Form)))
def test_monotonicity(p4, dp4, r20, core, t, form):
    eta = sq.polynomial_power(Fraction(p4, 4))
    xi = sq.prod(sq.polynomial_power(Fraction(p4 - dp4, 4)), sq.geometric(Fraction(r20, 20)))
    op = make_operator(core, CORE_ALPHA[core](), ScaleOperator(t), form)
    if membership(op, eta).overall.converges:
        assert not membership(op, xi).overall.diverges


# ---------------------------------------------------------------------------
# numeric probe


@pytest.mark.parametrize(
    "base, outcome",
    [
        (sq.polynomial_power(-2), Outcome.CONVERGES),
        (sq.geometric(Fraction(9, 10)), Outcome.CONVERGES),
        (sq.finite([1, 2, 3]), Outcome.CONVERGES),
        (sq.polynomial_power(-HALF), Outcome.DIVERGES),
        (sq.constant(1), Outcome.DIVERGES),
        (sq.geometric(Fraction(11, 10)), Outcome.DIVERGES),
    ],
)
def test_probe_examples(base, outcome):
    assert probe_l2(sq.Unannotated(base)).outcome is outcome


class _Raw(sq.Sequence):
    def __init__(self, fn):
        self.fn = fn

    def values_at(self, n):
        return self.fn(np.asarray(n, dtype=float))


def test_probe_inconclusive_on_sparse_spikes():
    # (n+1)^-1/2 on even indices, zero on odd: neither comparison closes
    v = probe_l2(_Raw(lambda n: np.where(n % 2 == 0, (n + 1) ** -0.5, 0.0)))
    assert v.outcome is Outcome.INCONCLUSIVE


def test_probe_nan_is_inconclusive():
    assert probe_l2(_Raw(lambda n: np.full(n.shape, np.nan))).outcome is Outcome.INCONCLUSIVE


def test_probe_geometric_tail_bound_is_valid():
    r = 0.99999
    v = probe_l2(sq.Unannotated(sq.geometric(Fraction(99999, 100000))))
    N = max(PROBE_DEPTHS)
    assert v.converges and v.evidence["comparison"] == "geometric"
    true_tail = r ** (2 * N) / (1 - r**2)
    assert v.evidence["tail_bound"] >= true_tail * (1 - 1e-8)


PROBE_DIVERGENT = {
    "inverse_sqrt": lambda n: 1 / (n + 1),
    "constant": lambda n: np.ones_like(n),
    "log_boost": lambda n: np.log(n + 2) / (n + 1),
}


@pytest.mark.parametrize("name", list(PROBE_DIVERGENT))
def test_probe_divergence_reproduced_at_4x_depth(name):
    sq_abs = PROBE_DIVERGENT[name]
    v = probe_l2(_Raw(lambda n: np.sqrt(sq_abs(n))))
    assert v.diverges and v.evidence["comparison"] == "harmonic"
    # independent oracle at 4x depth: for nonincreasing terms, dyadic block sums
    # that do not shrink force divergence (condensation)
    blocks = partial_sum_oracle(sq_abs, 4 * max(PROBE_DEPTHS))
    deep = blocks[-5:]
    assert deep[0] > 0 and np.all(np.diff(deep) >= -1e-8 * deep[0])


# ---------------------------------------------------------------------------
# weak convergence


def _span_vectors(k=32):
    return [Vector.basis(j) for j in range(k)]


def test_weak_probe_norm_convergent():
    target = np.array([2.0**-j for j in range(20)])
    sums = [Vector(sq.finite(np.where(np.arange(20) < k, target, 0).tolist())) for k in range(1, 61)]
    v = weak_convergence_probe(sums, _span_vectors())
    assert v.converges and np.allclose(v.evidence["eta"][:20], target)


def test_weak_probe_oscillating_coordinate():
    sums = [Vector(sq.finite([(-1) ** k, 1.0])) for k in range(40)]
    v = weak_convergence_probe(sums, _span_vectors())
    assert v.outcome is Outcome.INCONCLUSIVE


def test_weak_probe_never_diverges():
    sums = [Vector(sq.finite([float(k)])) for k in range(40)]
    assert weak_convergence_probe(sums, _span_vectors()).outcome is Outcome.INCONCLUSIVE


def test_weak_probe_needs_spanning_tests():
    with pytest.raises(ValueError):
        weak_convergence_probe([Vector([1]), Vector([1])], _span_vectors(31))


def test_weak_probe_diagonal_series():
    conj, _ = pair("diagonal", sq.geometric(2), sq.constant(1))
    sums = series_partial_sums(conj, Vector.basis(5), range(1, 41))
    v = weak_convergence_probe(sums, _span_vectors())
    assert v.converges
    assert np.allclose(v.evidence["eta"][:32], Vector.basis(5).take(32), atol=0)
    assert membership(conj, Vector.basis(5)).conditions[2].verdict.converges


# ---------------------------------------------------------------------------
# closedness witness


def test_witness_found_for_bounded_t():
    conj, _ = pair("diagonal", sq.geometric(HALF), sq.constant(1))
    w = closedness_witness(conj)
    assert w is not None
    assert w.report.conditions[0].verdict.diverges
    assert np.allclose(w.limit.take(10), 2.0 ** -np.arange(10))
    assert all(np.diff(w.input_residuals) <= 0) and w.input_residuals[-1] < 1e-9
    assert all(np.diff(w.image_residuals) <= 0)
    # identity on truncations
    k = 12
    phi0, _ = basis_vectors(ScaleOperator(sq.constant(1)), 0)
    assert np.allclose(w.truncation(k).take(k + 2), np.r_[2.0 ** -np.arange(k), 0, 0])
    assert phi0.take(1)[0] == 1


def test_witness_absent_for_dagger_and_unbounded_t():
    conj, _ = pair("diagonal", sq.geometric(HALF), sq.constant(1), dagger=True)
    assert closedness_witness(conj) is None
    conj, _ = pair("diagonal", sq.geometric(2), sq.constant(1))
    assert closedness_witness(conj) is None


def test_witness_ignores_formal_series():
    _, formal = pair("diagonal", sq.geometric(HALF), sq.constant(1))
    assert closedness_witness(formal) is None


def test_witness_for_shift_cores():
    for core in ("lower", "raise"):
        conj, _ = pair(core, sq.geometric(HALF))
        w = closedness_witness(conj)
        if w is not None:
            assert membership(conj, w.limit).overall.diverges
