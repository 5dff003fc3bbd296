"""Hermite functions, quadrature grids and the oscillator ladder operators.

The oscillator here uses ``a a*`` as its number operator, so ``f_n`` has
eigenvalue ``n + 1``.  On Gauss-Hermite grids derivatives are taken in
coefficient space through ``f_n' = (sqrt(n) f_{n-1} - sqrt(n+1) f_{n+1}) / sqrt(2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.hermite import hermgauss

from . import seq as sq
from .operators import ScaleOperator, Vector, apply, basis_vectors, commutator, is_identity, make_operator

MAX_INDEX = 128
_F0 = math.pi ** -0.25


class RuleMismatchError(ValueError):
    pass


def hermite_table(nmax: int, t) -> np.ndarray:
    """Rows f_0 .. f_nmax evaluated at ``t`` by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((nmax + 1,) + t.shape)
    with np.errstate(under="ignore"):
        out[0] = _F0 * np.exp(-t * t / 2)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * t * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_eval(n: int, t):
    """f_n(t), scalar or array ``t``; 0 <= n <= 128, |t| <= 40."""
    if not 0 <= n <= MAX_INDEX:
        raise ValueError(f"index {n} outside [0, {MAX_INDEX}]")
    if np.any(np.abs(np.asarray(t)) > 40):
        raise ValueError("|t| must not exceed 40")
    v = hermite_table(n, t)[n]
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights with ``sum(w * g(x)) ~ integral of g``.

    For ``gauss-hermite`` the Gaussian weight function is absorbed into the
    weights (``w_i = w_i^GH * exp(x_i^2)``), so the rule integrates
    polynomial-times-Gaussian integrands of degree up to 2m-1 exactly.
    """

    kind: str
    m: int
    L: float | None
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def key(self) -> tuple:
        return (self.kind, self.m, self.L)

    def __eq__(self, other):
        return isinstance(other, QuadratureRule) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


def quadrature_rule(kind: str = "gauss-hermite", m: int = 96, L: float | None = None) -> QuadratureRule:
    if m < 2:
        raise ValueError("need at least two nodes")
    if kind == "gauss-hermite":
        x, w = hermgauss(m)
        return QuadratureRule(kind, m, None, x, w * np.exp(x * x))
    if kind == "uniform":
        if L is None or L <= 0:
            raise ValueError("uniform rule needs a positive half-width L")
        x = np.linspace(-L, L, m)
        h = 2 * L / (m - 1)
        w = np.full(m, h)
        w[[0, -1]] = h / 2
        return QuadratureRule(kind, m, float(L), x, w)
    raise ValueError(f"unknown quadrature kind {kind!r}")


def default_rule(N: int = 0) -> QuadratureRule:
    return quadrature_rule("gauss-hermite", max(96, 2 * N + 16))


@dataclass(frozen=True, eq=False)
class GridFunction:
    rule: QuadratureRule
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != self.rule.nodes.shape:
            raise ValueError("values must match the rule's nodes")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_rule(self, other)
        return GridFunction(self.rule, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_rule(self, other)
        return GridFunction(self.rule, self.values - other.values)

    def __mul__(self, c) -> "GridFunction":
        return GridFunction(self.rule, self.values * c)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.sqrt(max(l2_inner(self, self).real, 0.0))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, v in zip(self.nodes, self.values):
                w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
        return path


def _same_rule(f: GridFunction, g: GridFunction):
    if f.rule != g.rule:
        raise RuleMismatchError(f"rules differ: {f.rule.key} vs {g.rule.key}")


def sample(n: int, rule: QuadratureRule) -> GridFunction:
    """f_n on the nodes of ``rule``."""
    return GridFunction(rule, hermite_table(n, rule.nodes)[n])


def l2_inner(f: GridFunction, g: GridFunction) -> complex:
    """(f | g) = sum w f conj(g)."""
    _same_rule(f, g)
    return complex(np.sum(f.weights * f.values * np.conj(g.values)))


def _coefficients(f: GridFunction, N: int) -> np.ndarray:
    table = hermite_table(N - 1, f.nodes)
    return table @ (f.weights * f.values)


def coefficientize(f: GridFunction, N: int) -> Vector:
    """Hermite coefficients c_n = (f | f_n), n < N, as a Vector."""
    if not 1 <= N <= MAX_INDEX:
        raise ValueError(f"N must lie in [1, {MAX_INDEX}]")
    return Vector(sq.finite([complex(c) for c in _coefficients(f, N)]))


def reconstruct(coeffs, rule: QuadratureRule) -> GridFunction:
    c = coeffs.take(len(coeffs.coeffs)) if isinstance(coeffs, Vector) else np.asarray(coeffs, dtype=complex)
    if len(c) == 0:
        return GridFunction(rule, np.zeros_like(rule.nodes, dtype=complex))
    return GridFunction(rule, hermite_table(len(c) - 1, rule.nodes).T @ c)


def _derivative(f: GridFunction) -> GridFunction:
    rule = f.rule
    if rule.kind == "uniform":
        h = rule.nodes[1] - rule.nodes[0]
        return GridFunction(rule, np.gradient(f.values, h))
    N = rule.m
    c = _coefficients(f, N)
    n = np.arange(N)
    d = np.zeros(N + 1, dtype=complex)
    # f_n' contributes sqrt(n)/sqrt2 to f_{n-1} and -sqrt(n+1)/sqrt2 to f_{n+1}
    d[:-2] += np.sqrt(n[1:]) * c[1:] / math.sqrt(2)
    d[1:] -= np.sqrt(n + 1) * c / math.sqrt(2)
    return reconstruct(d, rule)


def ladder_apply(mode: str, f: GridFunction) -> GridFunction:
    """lower (t f + f')/sqrt2, raise (t f - f')/sqrt2, number = lower after raise."""
    if mode == "number":
        return ladder_apply("lower", ladder_apply("raise", f))
    df = _derivative(f)
    tf = f.nodes * f.values
    if mode == "lower":
        return GridFunction(f.rule, (tf + df.values) / math.sqrt(2))
    if mode == "raise":
        return GridFunction(f.rule, (tf - df.values) / math.sqrt(2))
    raise ValueError(f"unknown ladder mode {mode!r}")


# ---------------------------------------------------------------------------
# grid-level checks


def gram_error(nmax: int, rule: QuadratureRule) -> float:
    table = hermite_table(nmax, rule.nodes)
    G = (table * rule.weights) @ table.T
    return float(np.max(np.abs(G - np.eye(nmax + 1))))


def ladder_residuals(nmax: int, rule: QuadratureRule) -> dict:
    """Max L2 residuals of the three ladder relations for n <= nmax."""
    lower = raise_ = number = 0.0
    for n in range(nmax + 1):
        fn = sample(n, rule)
        want = sample(n - 1, rule) * math.sqrt(n) if n else fn * 0
        lower = max(lower, (ladder_apply("lower", fn) - want).norm())
        if n < nmax:
            raise_ = max(raise_, (ladder_apply("raise", fn) - sample(n + 1, rule) * math.sqrt(n + 1)).norm())
        number = max(number, (ladder_apply("number", fn) - fn * (n + 1)).norm())
    return {"lower": lower, "raise": raise_, "number": number}


# ---------------------------------------------------------------------------
# the conjugated oscillator in coefficient space


@dataclass(frozen=True)
class ScenarioReport:
    order: int
    eigen_error: float
    lowering_error: float
    raising_error: float
    lowering_kills_ground: bool
    commutator_identity: bool
    tolerance: float

    @property
    def passed(self) -> bool:
        return (self.eigen_error <= self.tolerance and self.lowering_error <= self.tolerance
                and self.raising_error <= self.tolerance and self.lowering_kills_ground
                and self.commutator_identity)

    def to_dict(self) -> dict:
        return {"order": self.order, "eigen_error": self.eigen_error, "lowering_error": self.lowering_error,
                "raising_error": self.raising_error, "lowering_kills_ground": self.lowering_kills_ground,
                "commutator_identity": self.commutator_identity, "tolerance": self.tolerance,
                "passed": self.passed}


def _rel(got: np.ndarray, want: np.ndarray) -> float:
    ref = np.max(np.abs(want))
    return float(np.max(np.abs(got - want)) / ref) if ref else float(np.max(np.abs(got)))


def oscillator_operators(scale: ScaleOperator):
    """H = T H0 T^-1, A = T A0 T^-1, B = T A0* T^-1 with H0 = sum (n+1) f_n (x) f_n."""
    H = make_operator("diagonal", sq.polynomial_power(1), scale)
    A = make_operator("lower", sq.sqrt_index(), scale)
    B = make_operator("raise", sq.sqrt_index(), scale)
    return H, A, B


def example34_scenario(scale: ScaleOperator, N: int = 16, tol: float = 1e-12) -> ScenarioReport:
    """Eigen and ladder relations of the conjugated oscillator on phi_n, n < N."""
    if not 1 <= N <= 64:
        raise ValueError("N must lie in [1, 64]")
    H, A, B = oscillator_operators(scale)
    eig = low = up = 0.0
    M = N + 2
    phis = [basis_vectors(scale, n)[0] for n in range(N + 1)]
    for n in range(N):
        phi = phis[n]
        eig = max(eig, _rel(apply(H, phi, M), (n + 1) * phi.take(M)))
        low = max(low, _rel(apply(A, phis[n + 1], M), math.sqrt(n + 1) * phi.take(M)))
        up = max(up, _rel(apply(B, phi, M), math.sqrt(n + 1) * phis[n + 1].take(M)))
    ground = bool(np.all(apply(A, phis[0], M) == 0))
    return ScenarioReport(N, eig, low, up, ground, is_identity(commutator(A, B)), tol)


@dataclass(frozen=True)
class HermiteDemoReport:
    gram_error: float
    ladder: dict
    scenarios: dict
    csv_path: str | None = None
    tolerance_scale: float = 1.0

    @property
    def passed(self) -> bool:
        k = self.tolerance_scale
        return (self.gram_error <= 1e-8 * k and self.ladder["lower"] <= 1e-6 * k
                and self.ladder["raise"] <= 1e-6 * k and self.ladder["number"] <= 1e-5 * k
                and all(s.passed for s in self.scenarios.values()))

    def to_dict(self) -> dict:
        out = {"gram_error": self.gram_error, "ladder": dict(self.ladder),
               "scenarios": {k: v.to_dict() for k, v in self.scenarios.items()}, "passed": self.passed}
        if self.csv_path is not None:
            out["csv_path"] = self.csv_path
        return out


DEMO_SCALES = {
    "constant": lambda: ScaleOperator(sq.constant(1)),
    "geometric": lambda: ScaleOperator(sq.geometric(2)),
    "polynomial": lambda: ScaleOperator(sq.polynomial_power(1)),
}


def hermite_demo(nmax: int = 20, N: int = 16, csv_path=None, sample_index: int = 3,
                 tolerance_scale: float = 1.0) -> HermiteDemoReport:
    """Grid checks on f_0..f_nmax plus the coefficient scenario for three scales."""
    rule = default_rule(nmax)
    scen = {name: example34_scenario(make(), N, 1e-12 * tolerance_scale) for name, make in DEMO_SCALES.items()}
    path = None
    if csv_path is not None:
        path = str(sample(sample_index, rule).to_csv(csv_path))
    return HermiteDemoReport(gram_error(nmax, rule), ladder_residuals(nmax, rule), scen, path, tolerance_scale)
