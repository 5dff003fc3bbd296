import time
from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import HealthCheck, settings

from rieszops import seq as sq

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SUITE_BUDGET_S = 30.0
_started = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    elapsed = time.perf_counter() - _started
    verdict = "within" if elapsed < SUITE_BUDGET_S else "OVER"
    terminalreporter.write_line(f"suite runtime {elapsed:.1f} s ({verdict} the {SUITE_BUDGET_S:.0f} s budget)")


def fractions(lo, hi, denom=8):
    return st.integers(int(lo * denom), int(hi * denom)).map(lambda k: Fraction(k, denom))


@st.composite
def closed_form_params(draw, ratio=(Fraction(1, 4), Fraction(7, 4)), exponent=(-3, 2)):
    """(sequence, |c|, r, p, index offset) for c * r^n * (n+shift)^p families."""
    kind = draw(st.sampled_from(["geometric", "polynomial-power", "sqrt-index", "constant", "index", "both"]))
    c = draw(st.sampled_from([1, 2, Fraction(1, 3), 1 + 1j, -2]))
    if kind == "geometric":
        r = draw(fractions(*ratio))
        r = r if r > 0 else Fraction(1, 8)
        return sq.geometric(r, c), abs(complex(c)), r, Fraction(0), 1
    if kind == "polynomial-power":
        p = draw(fractions(*exponent))
        return sq.polynomial_power(p, c), abs(complex(c)), Fraction(1), p, 1
    if kind == "sqrt-index":
        return sq.sqrt_index(), 1.0, Fraction(1), Fraction(1, 2), 0
    if kind == "constant":
        return sq.constant(c), abs(complex(c)), Fraction(1), Fraction(0), 1
    if kind == "index":
        p = draw(fractions(Fraction(1, 8), exponent[1]))
        return sq.index_power(p), 1.0, Fraction(1), p, 0
    r = draw(fractions(*ratio))
    r = r if r > 0 else Fraction(1, 8)
    p = draw(fractions(*exponent))
    s = sq.product(sq.geometric(r, c), sq.polynomial_power(p))
    return s, abs(complex(c)), r, p, 1
