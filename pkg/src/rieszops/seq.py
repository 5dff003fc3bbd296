"""Complex coefficient sequences with a growth-annotation algebra.

A sequence is an immutable, total map ``n -> c_n`` for ``n >= 0``.  The closed
form vocabulary (geometric, polynomial power, sqrt index, constant) is kept in
an exact representation so that products, shifts and reciprocals stay exact and
ℓ² summability can be decided from the growth annotation alone.

Closed forms are sums of terms ``coef * r**n * prod_s (n + s)**p_s`` that vanish
below a start index.  Ratios, exponents and real coefficients are stored as
:class:`fractions.Fraction`, so ``t * (1/t)`` cancels exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Union

import numpy as np

Number = Union[int, Fraction, float, complex]

# Prefix length used to derive numeric envelope constants.
_ENVELOPE_PREFIX = 16384


class ReciprocalOfZeroError(ArithmeticError):
    """Raised when a reciprocal sequence is evaluated where the base is zero."""


def exact(x) -> Number:
    """Coerce ``x`` to an exact Fraction when it is real, else to complex."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        return Fraction(int(x))
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    if isinstance(x, str):
        return Fraction(x)
    z = complex(x)
    if z.imag == 0:
        return Fraction(z.real)
    return z


def _conj(x: Number) -> Number:
    return x.conjugate() if isinstance(x, complex) else x


def _abs(x: Number) -> float:
    return abs(complex(x))


# ---------------------------------------------------------------------------
# growth annotations and verdicts


class Outcome(str, Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    evidence: dict = field(default_factory=dict, compare=False)

    @property
    def converges(self) -> bool:
        return self.outcome is Outcome.CONVERGES

    @property
    def diverges(self) -> bool:
        return self.outcome is Outcome.DIVERGES


@dataclass(frozen=True)
class GrowthAnnotation:
    """Envelope ``|c_n| <= constant * ratio**n * (n+1)**exponent``.

    ``exact`` marks an exact-asymptotic envelope: the bound is attained up to a
    constant on a set of indices of positive density, which is what a
    divergence verdict needs.  ``ratio == 0`` is the eventually-zero sentinel.
    """

    ratio: Fraction
    exponent: Fraction
    constant: float
    exact: bool

    @classmethod
    def eventually_zero(cls, constant: float = 0.0) -> "GrowthAnnotation":
        return cls(Fraction(0), Fraction(0), float(constant), True)

    @property
    def is_eventually_zero(self) -> bool:
        return self.ratio == 0

    @property
    def exactness(self) -> str:
        return "exact-asymptotic" if self.exact else "upper-bound"

    def bound(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            return self.constant * np.power(float(self.ratio), n) * np.power(n + 1.0, float(self.exponent))

    def l2_verdict(self) -> Verdict:
        r, p = self.ratio, self.exponent
        evidence = {
            "rule": "annotation",
            "ratio": str(r),
            "exponent": str(p),
            "exactness": self.exactness,
        }
        if r < 1 or (r == 1 and p < Fraction(-1, 2)):
            return Verdict(Outcome.CONVERGES, evidence)
        if self.exact:
            return Verdict(Outcome.DIVERGES, evidence)
        return Verdict(Outcome.INCONCLUSIVE, evidence)


def _sup_power_ratio(x: float, q: float) -> float:
    """sup over n >= 0 of x**n * (n+1)**q for 0 <= x <= 1 (finite cases only)."""
    if q <= 0:
        return 1.0
    if x >= 1:
        return math.inf
    if x <= 0:
        return 1.0
    n_star = q / -math.log(x) - 1.0
    best = 1.0
    for n in (math.floor(n_star), math.ceil(n_star)):
        if n >= 0:
            best = max(best, math.exp(n * math.log(x) + q * math.log(n + 1.0)))
    return best


def _dominant(annotations: list[GrowthAnnotation]) -> GrowthAnnotation:
    """Envelope for a sum of sequences with the given envelopes."""
    live = [a for a in annotations if not a.is_eventually_zero]
    if not live:
        return GrowthAnnotation.eventually_zero(sum(a.constant for a in annotations))
    top = max((a.ratio, a.exponent) for a in live)
    r, p = top
    tops = [a for a in live if (a.ratio, a.exponent) == top]
    total = 0.0
    for a in annotations:
        if a.is_eventually_zero:
            # finitely many nonzero terms; envelope constant taken as-is
            total += a.constant
            continue
        total += a.constant * _sup_power_ratio(float(a.ratio / r), float(a.exponent - p))
    exact_ = len(tops) == 1 and tops[0].exact
    return GrowthAnnotation(r, p, total, exact_)


# ---------------------------------------------------------------------------
# base class


class Sequence:
    """A total map n -> complex for n >= 0."""

    def values_at(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def growth(self) -> GrowthAnnotation | None:
        return None

    def eventually_nonzero(self) -> bool:
        return False

    # evaluation ------------------------------------------------------------

    def eval(self, n: int) -> complex:
        if n < 0:
            raise ValueError("sequences are indexed by n >= 0")
        return complex(self.values_at(np.array([n], dtype=np.int64))[0])

    __call__ = eval

    def values(self, count: int, start: int = 0) -> np.ndarray:
        return self.values_at(np.arange(start, start + count, dtype=np.int64))

    def take(self, count: int) -> np.ndarray:
        return self.values(count)

    # algebra ---------------------------------------------------------------

    def __mul__(self, other):
        return product(self, _as_sequence(other))

    __rmul__ = __mul__

    def __add__(self, other):
        return add(self, _as_sequence(other))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return add(self, -_as_sequence(other))

    def __rsub__(self, other):
        return add(_as_sequence(other), -self)

    def shift(self, k: int) -> "Sequence":
        return shift(self, k)

    def conjugate(self) -> "Sequence":
        return conjugate(self)

    def reciprocal(self) -> "Sequence":
        return reciprocal(self)


def _as_sequence(x) -> Sequence:
    if isinstance(x, Sequence):
        return x
    return constant(x)


# ---------------------------------------------------------------------------
# finite support


@dataclass(frozen=True, eq=True)
class Finite(Sequence):
    """Finite-support sequence; exactly zero past the stored values."""

    data: tuple = ()

    def __post_init__(self):
        vals = [exact(v) for v in self.data]
        while vals and vals[-1] == 0:
            vals.pop()
        object.__setattr__(self, "data", tuple(vals))

    def __len__(self):
        return len(self.data)

    def values_at(self, n):
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=complex)
        if self.data:
            table = np.array([complex(v) for v in self.data])
            mask = (n >= 0) & (n < len(self.data))
            out[mask] = table[n[mask]]
        return out

    def eval(self, n):
        if n < 0:
            raise ValueError("sequences are indexed by n >= 0")
        return complex(self.data[n]) if n < len(self.data) else 0j

    def growth(self):
        m = max((_abs(v) for v in self.data), default=0.0)
        return GrowthAnnotation.eventually_zero(m)


# ---------------------------------------------------------------------------
# closed forms


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _poly_trim(p: list) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_eval(p, n) -> Number:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * n + c
    return acc


@dataclass(frozen=True)
class Term:
    """``coef * ratio**n * prod (n + s)**p`` for n >= start, 0 below."""

    coef: Number
    ratio: Fraction = Fraction(1)
    start: int = 0
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coef", exact(self.coef))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if self.ratio <= 0:
            raise ValueError("term ratio must be positive")
        merged: dict[int, Fraction] = {}
        for s, p in self.factors:
            merged[int(s)] = merged.get(int(s), Fraction(0)) + Fraction(p)
        object.__setattr__(self, "factors", tuple(sorted((s, p) for s, p in merged.items() if p != 0)))

    @property
    def key(self):
        return (self.ratio, self.start, self.factors)

    def values_at(self, n):
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=complex)
        mask = n >= self.start
        if not mask.any() or self.coef == 0:
            return out
        m = n[mask].astype(float)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            v = np.full(m.shape, complex(self.coef))
            if self.ratio != 1:
                v = v * np.power(float(self.ratio), m)
            for s, p in self.factors:
                base = m + s
                if p < 0 and np.any(base == 0):
                    bad = int(n[mask][np.argmax(base == 0)])
                    raise ReciprocalOfZeroError(f"zero base (n{s:+d}) raised to {p} at n={bad}")
                v = v * np.power(base, float(p))
        out[mask] = v
        return out

    def mul(self, other: "Term") -> "Term":
        return Term(
            self.coef * other.coef,
            self.ratio * other.ratio,
            max(self.start, other.start),
            self.factors + other.factors,
        )

    def shifted(self, k: int) -> "Term":
        return Term(
            self.coef * self.ratio**k,
            self.ratio,
            max(0, self.start - k),
            tuple((s + k, p) for s, p in self.factors),
        )

    def conj(self) -> "Term":
        return Term(_conj(self.coef), self.ratio, self.start, self.factors)

    def inverse(self) -> "Term | None":
        if self.start > 0 or self.coef == 0:
            return None
        return Term(1 / self.coef, 1 / self.ratio, 0, tuple((s, -p) for s, p in self.factors))

    def expanded(self):
        """(key, poly) with nonnegative integer powers multiplied out."""
        poly = [self.coef]
        irr = []
        for s, p in self.factors:
            if p.denominator == 1 and p > 0:
                for _ in range(int(p)):
                    poly = _poly_mul(poly, [Fraction(s), Fraction(1)])
            else:
                irr.append((s, p))
        return (self.ratio, self.start, tuple(irr)), _poly_trim(poly)


def _vanishes_below(key, poly):
    """Lower the start index while the expression is exactly zero there."""
    ratio, start, irr = key
    while start > 0:
        m = start - 1
        ok = True
        zero = False
        for s, p in irr:
            base = m + s
            if base < 0 or (base == 0 and p < 0):
                ok = False
            if base == 0 and p > 0:
                zero = True
        if not ok:
            break
        if not zero and _poly_eval(poly, m) != 0:
            break
        start = m
    return (ratio, start, irr)


@dataclass(frozen=True, eq=False)
class ClosedForm(Sequence):
    """A finite sum of :class:`Term` objects."""

    terms: tuple = ()

    def __post_init__(self):
        merged: dict = {}
        order = []
        for t in self.terms:
            if t.key not in merged:
                order.append(t.key)
                merged[t.key] = t.coef
            else:
                merged[t.key] += t.coef
        terms = tuple(Term(merged[k], k[0], k[1], k[2]) for k in order if merged[k] != 0)
        object.__setattr__(self, "terms", terms)

    # canonical form drives equality and growth
    @cached_property
    def canonical(self) -> tuple:
        entries: dict = {}
        for t in self.terms:
            key, poly = t.expanded()
            entries[key] = [a + b for a, b in _zip_pad(entries.get(key, []), poly)]
        while True:
            lowered: dict = {}
            for key, poly in entries.items():
                poly = _poly_trim(poly)
                if not poly:
                    continue
                key = _vanishes_below(key, poly)
                lowered[key] = [a + b for a, b in _zip_pad(lowered.get(key, []), poly)]
            lowered = {k: _poly_trim(p) for k, p in lowered.items() if _poly_trim(p)}
            if lowered == entries:
                break
            entries = lowered
        result = [(k, tuple(p)) for k, p in entries.items()]
        result.sort(key=lambda e: e[0])
        return tuple(result)

    def __eq__(self, other):
        if isinstance(other, ClosedForm):
            return self.canonical == other.canonical
        if isinstance(other, Sequence):
            return is_zero(self) and is_zero(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.canonical)

    def simplified(self) -> "ClosedForm":
        """Rebuild from the canonical form (polynomials as powers of n)."""
        terms = []
        for (ratio, start, irr), poly in self.canonical:
            for j, c in enumerate(poly):
                if c != 0:
                    terms.append(Term(c, ratio, start, irr + (((0, Fraction(j)),) if j else ())))
        return ClosedForm(tuple(terms))

    def values_at(self, n):
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=complex)
        for t in self.terms:
            out = out + t.values_at(n)
        return out

    def growth(self):
        entries = self.canonical
        if not entries:
            return GrowthAnnotation.eventually_zero()
        specs = []
        for (ratio, start, irr), poly in entries:
            p = Fraction(len(poly) - 1) + sum((e for _, e in irr), Fraction(0))
            specs.append((ratio, p, start, irr, poly))
        top = max((r, p) for r, p, *_ in specs)
        r_top, p_top = top
        n_tops = sum(1 for r, p, *_ in specs if (r, p) == top)
        total = 0.0
        for r, p, start, irr, poly in specs:
            total += _entry_envelope(r, p, start, irr, poly, r_top, p_top, (r, p) == top)
        return GrowthAnnotation(r_top, p_top, total, n_tops == 1)

    def eventually_nonzero(self):
        g = self.growth()
        return g.exact and not g.is_eventually_zero


def _zip_pad(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return zip(a, b)


def _entry_envelope(r, p, start, irr, poly, r_top, p_top, dominant) -> float:
    """sup_n |entry(n)| / (r_top**n (n+1)**p_top), prefix-sampled plus limit."""
    n = np.arange(start, start + _ENVELOPE_PREFIX, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pv = np.zeros_like(n, dtype=complex)
        for c in reversed(poly):
            pv = pv * n + complex(c)
        logv = np.log(np.abs(pv))
        for s, e in irr:
            logv = logv + float(e) * np.log(n + s)
        logv = logv + n * (math.log(float(r)) - math.log(float(r_top))) - float(p_top) * np.log(n + 1.0)
        finite = logv[np.isfinite(logv)]
    prefix = float(np.exp(finite.max())) if finite.size else 0.0
    limit = _abs(poly[-1]) if dominant else 0.0
    return max(prefix, limit) * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# tabulated


@dataclass(frozen=True)
class Tabulated(Sequence):
    """Explicit table followed by ``tail`` (absolute index), or repeated cyclically.

    ``annotation`` may be declared; it is spot-checked against the table.
    """

    data: tuple
    tail: Sequence | None = None
    annotation: GrowthAnnotation | None = None

    def __post_init__(self):
        if not self.data and self.tail is None:
            raise ValueError("cyclic tabulated sequence needs at least one value")
        object.__setattr__(self, "data", tuple(exact(v) for v in self.data))
        if self.annotation is not None and not self.annotation.is_eventually_zero:
            n = np.arange(len(self.data))
            mags = np.abs(np.array([complex(v) for v in self.data]))
            if np.any(mags > self.annotation.bound(n) * (1 + 1e-12)):
                raise ValueError("declared annotation violated by the tabulated values")

    @property
    def cyclic(self) -> bool:
        return self.tail is None

    def values_at(self, n):
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=complex)
        L = len(self.data)
        table = np.array([complex(v) for v in self.data]) if L else np.zeros(0, complex)
        if self.cyclic:
            return table[n % L]
        head = n < L
        if head.any():
            out[head] = table[n[head]]
        if (~head).any():
            out[~head] = self.tail.values_at(n[~head])
        return out

    def growth(self):
        if self.annotation is not None:
            return self.annotation
        mags = [_abs(v) for v in self.data]
        if self.cyclic:
            if max(mags) == 0:
                return GrowthAnnotation.eventually_zero()
            return GrowthAnnotation(Fraction(1), Fraction(0), max(mags), True)
        g = self.tail.growth()
        if g is None:
            return None
        if g.is_eventually_zero:
            return GrowthAnnotation.eventually_zero(max([g.constant] + mags))
        n = np.arange(len(self.data))
        with np.errstate(divide="ignore", invalid="ignore"):
            env = GrowthAnnotation(g.ratio, g.exponent, 1.0, g.exact).bound(n)
            rel = np.array(mags) / env if mags else np.zeros(0)
        c = max([g.constant] + [float(x) for x in rel if np.isfinite(x)])
        return GrowthAnnotation(g.ratio, g.exponent, c, g.exact)

    def eventually_nonzero(self):
        if self.cyclic:
            return all(v != 0 for v in self.data)
        return self.tail.eventually_nonzero()


# ---------------------------------------------------------------------------
# lazy combinator nodes


@dataclass(frozen=True)
class Product(Sequence):
    factors: tuple

    def values_at(self, n):
        out = np.ones(np.shape(n), dtype=complex)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            for f in self.factors:
                out = out * f.values_at(n)
        return out

    def growth(self):
        gs = [f.growth() for f in self.factors]
        if any(g is None for g in gs):
            return None
        if any(g.is_eventually_zero for g in gs):
            return GrowthAnnotation.eventually_zero(math.prod(g.constant for g in gs))
        sparse = sum(1 for f in self.factors if not f.eventually_nonzero())
        return GrowthAnnotation(
            math.prod((g.ratio for g in gs), start=Fraction(1)),
            sum((g.exponent for g in gs), Fraction(0)),
            math.prod(g.constant for g in gs),
            all(g.exact for g in gs) and sparse <= 1,
        )

    def eventually_nonzero(self):
        return all(f.eventually_nonzero() for f in self.factors)


@dataclass(frozen=True)
class Shifted(Sequence):
    """n -> base(n + k), zero where n + k < 0."""

    base: Sequence
    k: int

    def values_at(self, n):
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=complex)
        idx = n + self.k
        mask = idx >= 0
        if mask.any():
            out[mask] = self.base.values_at(idx[mask])
        return out

    def growth(self):
        g = self.base.growth()
        if g is None or g.is_eventually_zero:
            return g
        k, p = self.k, float(g.exponent)
        if k >= 0:
            widen = (k + 1.0) ** p if p > 0 else 1.0
        else:
            widen = (1.0 - k) ** (-p) if p < 0 else 1.0
        return GrowthAnnotation(g.ratio, g.exponent, g.constant * float(g.ratio) ** k * widen, g.exact)

    def eventually_nonzero(self):
        return self.base.eventually_nonzero()


@dataclass(frozen=True)
class Conjugate(Sequence):
    base: Sequence

    def values_at(self, n):
        return np.conj(self.base.values_at(n))

    def growth(self):
        return self.base.growth()

    def eventually_nonzero(self):
        return self.base.eventually_nonzero()


@dataclass(frozen=True)
class Reciprocal(Sequence):
    """Pointwise 1/base; evaluation raises where base is exactly zero."""

    base: Sequence

    def values_at(self, n):
        v = self.base.values_at(n)
        zero = v == 0
        if np.any(zero):
            bad = int(np.asarray(n).reshape(-1)[np.argmax(zero.reshape(-1))])
            raise ReciprocalOfZeroError(f"reciprocal of zero term at n={bad}")
        return 1.0 / v

    @cached_property
    def _growth(self):
        g = self.base.growth()
        if g is None or not g.exact or g.is_eventually_zero or not self.base.eventually_nonzero():
            return None
        r, p = 1 / g.ratio, -g.exponent
        n = np.arange(_ENVELOPE_PREFIX // 4)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = np.abs(self.base.values_at(n))
            rel = 1.0 / (v * GrowthAnnotation(r, p, 1.0, True).bound(n))
        rel = rel[np.isfinite(rel)]
        # envelope constant is empirical: twice the prefix supremum
        c = 2.0 * float(rel.max()) if rel.size else 1.0
        return GrowthAnnotation(r, p, c, True)

    def growth(self):
        return self._growth

    def eventually_nonzero(self):
        return True


@dataclass(frozen=True)
class Sum(Sequence):
    """Linear combination: tuple of (coefficient, sequence) pairs."""

    parts: tuple

    def values_at(self, n):
        out = np.zeros(np.shape(n), dtype=complex)
        for c, s in self.parts:
            out = out + complex(c) * s.values_at(n)
        return out

    def growth(self):
        gs = []
        for c, s in self.parts:
            g = s.growth()
            if g is None:
                return None
            gs.append(GrowthAnnotation(g.ratio, g.exponent, g.constant * _abs(c), g.exact))
        return _dominant(gs)

    def eventually_nonzero(self):
        g = self.growth()
        return g is not None and g.exact and not g.is_eventually_zero


@dataclass(frozen=True)
class Unannotated(Sequence):
    """Hides the growth annotation of ``base``; forces the numeric probe."""

    base: Sequence

    def values_at(self, n):
        return self.base.values_at(n)


# ---------------------------------------------------------------------------
# constructors


ZERO = ClosedForm(())


def finite(values: Iterable) -> Finite:
    return Finite(tuple(values))


def geometric(ratio, scale=1) -> ClosedForm:
    """c * r**n."""
    return ClosedForm((Term(scale, exact(ratio)),))


def polynomial_power(exponent, scale=1) -> ClosedForm:
    """c * (n + 1)**p."""
    return ClosedForm((Term(scale, 1, 0, ((1, exact(exponent)),)),))


def sqrt_index() -> ClosedForm:
    """sqrt(n), zero at n = 0."""
    return ClosedForm((Term(1, 1, 0, ((0, Fraction(1, 2)),)),))


def index_power(exponent=1) -> ClosedForm:
    """n**p; for p > 0 this is zero at n = 0, for p < 0 it starts at n = 1."""
    p = exact(exponent)
    return ClosedForm((Term(1, 1, 0 if p > 0 else 1, ((0, p),)),))


def constant(value) -> ClosedForm:
    return ClosedForm((Term(value),))


def tabulated(values, tail: Sequence | None = None, annotation: GrowthAnnotation | None = None) -> Sequence:
    vals = tuple(exact(v) for v in values)
    if tail is None and annotation is None and vals:
        if all(v == vals[0] for v in vals):
            return constant(vals[0]) if vals[0] != 0 else ZERO
    return Tabulated(vals, tail, annotation)


# ---------------------------------------------------------------------------
# algebra


def is_zero(s: Sequence) -> bool:
    if isinstance(s, Finite):
        return not s.data
    if isinstance(s, ClosedForm):
        return not s.canonical
    if isinstance(s, Sum):
        return not s.parts
    return False


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _flatten(s: Sequence) -> list:
    return list(s.factors) if isinstance(s, Product) else [s]


def _make_product(factors: list) -> Sequence:
    factors = list(factors)
    # cancel x * reciprocal(x) before anything is merged
    i = 0
    while i < len(factors):
        f = factors[i]
        partner = None
        if isinstance(f, Reciprocal):
            for j, g in enumerate(factors):
                if j != i and g == f.base:
                    partner = j
                    break
        if partner is not None:
            for j in sorted((i, partner), reverse=True):
                factors.pop(j)
            i = 0
            continue
        i += 1
    single = [f for f in factors if isinstance(f, ClosedForm) and len(f.terms) == 1]
    multi = [f for f in factors if isinstance(f, ClosedForm) and len(f.terms) != 1]
    cyclic = [f for f in factors if isinstance(f, Tabulated) and f.cyclic]
    rest = [f for f in factors if not isinstance(f, ClosedForm) and not (isinstance(f, Tabulated) and f.cyclic)]
    out = []
    if single:
        term = single[0].terms[0]
        for f in single[1:]:
            term = term.mul(f.terms[0])
        merged = ClosedForm((term,))
        if is_zero(merged):
            return ZERO
        if merged != constant(1):
            out.append(merged)
    out.extend(multi)
    if cyclic:
        tab = _tab_product(cyclic)
        if isinstance(tab, ClosedForm):
            if is_zero(tab):
                return ZERO
            if tab != constant(1):
                out.insert(0, tab)
        else:
            out.append(tab)
    out.extend(rest)
    if any(is_zero(f) for f in out):
        return ZERO
    if not out:
        return constant(1)
    if all(isinstance(f, ClosedForm) for f in out):
        acc = out[0]
        for f in out[1:]:
            acc = _cf_product(acc, f)
        return acc
    if len(out) == 1:
        return out[0]
    return Product(tuple(out))


def _cf_product(a: ClosedForm, b: ClosedForm) -> ClosedForm:
    return ClosedForm(tuple(x.mul(y) for x in a.terms for y in b.terms))


def _tab_product(tabs: list) -> Sequence:
    L = 1
    for t in tabs:
        L = _lcm(L, len(t.data))
    data = []
    for i in range(L):
        v = Fraction(1)
        for t in tabs:
            v = v * t.data[i % len(t.data)]
        data.append(v)
    return tabulated(data)


def _finite_times(f: Finite, other: Sequence) -> Finite:
    if isinstance(other, Finite):
        return Finite(tuple(x * y for x, y in zip(f.data, other.data)))
    vals = other.values_at(np.arange(len(f.data))) if f.data else []
    return Finite(tuple(exact(x) * exact(v) if x != 0 else 0 for x, v in zip(f.data, vals)))


def _cancel_pairs(seqs: list) -> list:
    """Drop pairs (x, y) with y structurally equal to reciprocal(x)."""
    seqs = list(seqs)
    i = 0
    while i < len(seqs):
        f = seqs[i]
        if isinstance(f, (Tabulated, Reciprocal)):
            inv = reciprocal(f)
            j = next((j for j, g in enumerate(seqs) if j != i and g == inv), None)
            if j is not None:
                for idx in sorted((i, j), reverse=True):
                    seqs.pop(idx)
                i = 0
                continue
        i += 1
    return seqs


def product(a: Sequence, b: Sequence) -> Sequence:
    return prod(a, b)


def prod(*seqs: Sequence) -> Sequence:
    """Pointwise product of several sequences, flattened before simplifying.

    Building ``t * alpha * (1/t)`` in one call lets the reciprocal pair cancel
    structurally even when ``t`` has no single-term closed form.
    """
    seqs = _cancel_pairs([_as_sequence(s) for s in seqs])
    fin = [s for s in seqs if isinstance(s, Finite)]
    if fin:
        acc = fin[0]
        for s in seqs:
            if s is not fin[0]:
                acc = _finite_times(acc, s)
        return acc
    tailed = [s for s in seqs if isinstance(s, Tabulated) and not s.cyclic]
    if tailed:
        t = tailed[0]
        others = [s for s in seqs if s is not t]
        L = len(t.data)
        head = np.ones(L, dtype=complex)
        for s in others:
            head = head * s.values_at(np.arange(L))
        data = [exact(x) * exact(h) for x, h in zip(t.data, head)] if others else list(t.data)
        return tabulated(data, tail=prod(t.tail, *others))
    factors = []
    for s in seqs:
        factors.extend(_flatten(s))
    return _make_product(factors)


def scale(s: Sequence, c) -> Sequence:
    c = exact(c)
    if isinstance(s, (ClosedForm, Finite, Tabulated, Product)):
        return prod(s, constant(c))
    return add_all([(c, s)])


def shift(s: Sequence, k: int) -> Sequence:
    """n -> s(n + k); positive k drops leading entries, negative k pads zeros."""
    k = int(k)
    if k == 0:
        return s
    if isinstance(s, Finite):
        if k > 0:
            return Finite(s.data[k:])
        return Finite((0,) * (-k) + s.data)
    if isinstance(s, ClosedForm):
        return ClosedForm(tuple(t.shifted(k) for t in s.terms))
    if isinstance(s, Tabulated):
        if s.cyclic:
            if k > 0:
                L = len(s.data)
                return Tabulated(tuple(s.data[(i + k) % L] for i in range(L)))
            return Shifted(s, k)
        if k > 0:
            return tabulated(s.data[k:], tail=shift(s.tail, k)) if k < len(s.data) else shift(s.tail, k)
        return tabulated((0,) * (-k) + s.data, tail=shift(s.tail, k))
    if isinstance(s, Product):
        return prod(*(shift(f, k) for f in s.factors))
    if isinstance(s, Sum):
        return add_all([(c, shift(x, k)) for c, x in s.parts])
    if isinstance(s, Conjugate):
        return conjugate(shift(s.base, k))
    if isinstance(s, Reciprocal) and k > 0:
        return reciprocal(shift(s.base, k))
    if isinstance(s, Shifted) and k > 0:
        return shift(s.base, s.k + k)
    if isinstance(s, Unannotated):
        return Unannotated(shift(s.base, k))
    return Shifted(s, k)


def conjugate(s: Sequence) -> Sequence:
    if isinstance(s, Finite):
        return Finite(tuple(_conj(v) for v in s.data))
    if isinstance(s, ClosedForm):
        return ClosedForm(tuple(t.conj() for t in s.terms))
    if isinstance(s, Tabulated):
        data = tuple(_conj(v) for v in s.data)
        return Tabulated(data, None if s.cyclic else conjugate(s.tail), s.annotation)
    if isinstance(s, Product):
        return prod(*(conjugate(f) for f in s.factors))
    if isinstance(s, Sum):
        return add_all([(_conj(c), conjugate(x)) for c, x in s.parts])
    if isinstance(s, Conjugate):
        return s.base
    if isinstance(s, Reciprocal):
        return reciprocal(conjugate(s.base))
    if isinstance(s, Shifted):
        return Shifted(conjugate(s.base), s.k)
    return Conjugate(s)


def reciprocal(s: Sequence) -> Sequence:
    """Pointwise 1/s.  Zero terms raise lazily, on evaluation."""
    if isinstance(s, ClosedForm) and len(s.terms) == 1:
        inv = s.terms[0].inverse()
        if inv is not None:
            return ClosedForm((inv,))
    if isinstance(s, Tabulated) and all(v != 0 for v in s.data):
        if s.cyclic:
            return Tabulated(tuple(1 / v for v in s.data))
        return tabulated(tuple(1 / v for v in s.data), tail=reciprocal(s.tail))
    if isinstance(s, Product):
        return prod(*(reciprocal(f) for f in s.factors))
    if isinstance(s, Reciprocal):
        return s.base
    if isinstance(s, Conjugate):
        return conjugate(reciprocal(s.base))
    if isinstance(s, Shifted) and s.k > 0:
        return shift(reciprocal(s.base), s.k)
    return Reciprocal(s)


def add_all(pairs: list) -> Sequence:
    """Linear combination sum(c * s) with like sequences merged."""
    cf = ZERO
    merged: list = []
    tail_extra = []
    for c, s in pairs:
        c = exact(c)
        if c == 0 or is_zero(s):
            continue
        if isinstance(s, ClosedForm):
            cf = ClosedForm(cf.terms + tuple(Term(t.coef * c, t.ratio, t.start, t.factors) for t in s.terms))
            continue
        if isinstance(s, Sum):
            for c2, s2 in s.parts:
                merged.append([c * c2, s2])
            continue
        if isinstance(s, (Finite, Tabulated)) and not (isinstance(s, Tabulated) and s.cyclic):
            tail_extra.append((c, s))
            continue
        merged.append([c, s])
    # combine structurally equal parts
    combined: list = []
    for c, s in merged:
        for entry in combined:
            if entry[1] == s:
                entry[0] += c
                break
        else:
            combined.append([c, s])
    parts = [(c, s) for c, s in combined if c != 0]
    if not is_zero(cf):
        parts.insert(0, (Fraction(1), cf))
    if tail_extra:
        # a finite or tabulated head absorbs everything else as its tail
        rest = add_all(parts) if parts else ZERO
        acc = rest
        for c, s in tail_extra:
            acc = _add_headed(acc, c, s)
        return acc
    if not parts:
        return ZERO
    if len(parts) == 1 and parts[0][0] == 1:
        return parts[0][1]
    return Sum(tuple(parts))


def _exact_head(rest: Sequence, L: int) -> list:
    if isinstance(rest, Finite):
        return list(rest.data[:L]) + [Fraction(0)] * max(0, L - len(rest.data))
    if isinstance(rest, Tabulated) and not rest.cyclic and len(rest.data) >= L:
        return list(rest.data[:L])
    return [exact(h) for h in rest.values_at(np.arange(L))] if L else []


def _add_headed(rest: Sequence, c, s: Sequence) -> Sequence:
    L = len(s.data)
    data = [c * v + h for v, h in zip(s.data, _exact_head(rest, L))]
    if isinstance(s, Finite):
        if isinstance(rest, Finite):
            return Finite(tuple(data) + rest.data[L:])
        if is_zero(rest):
            return Finite(tuple(data))
        if isinstance(rest, Tabulated) and not rest.cyclic and len(rest.data) >= L:
            return tabulated(tuple(data) + rest.data[L:], tail=rest.tail)
        return tabulated(data, tail=rest) if L else rest
    return tabulated(data, tail=add_all([(1, rest), (c, s.tail)]))


def add(a: Sequence, b: Sequence) -> Sequence:
    return add_all([(1, a), (1, b)])


def combine(op: str, a: Sequence, b: Sequence | None = None, k: int | None = None) -> Sequence:
    """Dispatch on ``op`` in {product, shift, conjugate, reciprocal}."""
    if op == "product":
        if b is None:
            raise ValueError("product needs two sequences")
        return product(a, b)
    if op == "shift":
        if k is None:
            raise ValueError("shift needs k")
        return shift(a, k)
    if op == "conjugate":
        return conjugate(a)
    if op == "reciprocal":
        return reciprocal(a)
    raise ValueError(f"unknown combine op {op!r}")


def growth_of(s: Sequence) -> GrowthAnnotation | None:
    return s.growth()


def l2_summable(s: Sequence) -> Verdict:
    """ℓ² verdict from the annotation, else from the numeric probe."""
    g = s.growth()
    if g is not None:
        return g.l2_verdict()
    from .domain import probe_l2

    return probe_l2(s)
