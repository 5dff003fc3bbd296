"""Operators defined by a positive diagonal scale in ℓ² coordinates.

Every operator is stored as a set of bands: band ``d`` with weight ``w`` sends
input coefficient ``m + d`` to output coefficient ``m`` multiplied by ``w(m)``.
The conjugated and formal-series forms of the same core share their bands; they
only differ in how their domains are decided (see :mod:`rieszops.domain`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import numpy as np

from . import seq as sq
from .seq import Sequence

CORES = ("diagonal", "lower", "raise")
_SWAP = {"diagonal": "diagonal", "lower": "raise", "raise": "lower"}
_NAMES = {"diagonal": "H", "lower": "A", "raise": "B"}


class ScaleMismatchError(ValueError):
    pass


class Form(str, Enum):
    CONJUGATED = "conjugated"
    FORMAL_SERIES = "formal-series"


def _bounded_from(g) -> bool | None:
    if g is None:
        return None
    if g.is_eventually_zero or g.ratio < 1 or (g.ratio == 1 and g.exponent <= 0):
        return True
    return False if g.exact else None


@dataclass(frozen=True)
class ScaleOperator:
    """Positive diagonal model of T: ``T e_n = t_n e_n``.

    ``bounded`` / ``inverse_bounded`` are decided from the growth annotations of
    ``t`` and ``1/t``; ``None`` means the annotation cannot tell.
    """

    t: Sequence

    def __post_init__(self):
        v = self.t.values(64)
        if np.any(v.imag != 0) or np.any(v.real <= 0):
            raise ValueError("scale weights must be strictly positive reals")

    @property
    def bounded(self) -> bool | None:
        return _bounded_from(self.t.growth())

    @property
    def inverse_bounded(self) -> bool | None:
        return _bounded_from(sq.reciprocal(self.t).growth())

    @property
    def is_riesz(self) -> bool:
        return bool(self.bounded) and bool(self.inverse_bounded)

    def inverse(self) -> "ScaleOperator":
        return ScaleOperator(sq.reciprocal(self.t))


@dataclass(frozen=True)
class Vector:
    """An element of H given by its coefficients in the reference ONB."""

    coeffs: Sequence

    def __post_init__(self):
        if not isinstance(self.coeffs, Sequence):
            object.__setattr__(self, "coeffs", sq.finite(self.coeffs))
        g = self.coeffs.growth()
        if g is not None and g.l2_verdict().diverges:
            raise ValueError("coefficient sequence is not square summable")

    @classmethod
    def basis(cls, n: int, weight=1) -> "Vector":
        return cls(sq.Finite((0,) * n + (sq.exact(weight),)))

    def take(self, count: int) -> np.ndarray:
        return self.coeffs.values(count)

    def values_at(self, n) -> np.ndarray:
        return self.coeffs.values_at(n)


def _coeffs(x) -> Sequence:
    if isinstance(x, Vector):
        return x.coeffs
    if isinstance(x, Sequence):
        return x
    return sq.finite(x)


@dataclass(frozen=True)
class OperatorSpec:
    bands: tuple
    form: Form
    core: str
    scale: ScaleOperator
    alpha: Sequence | None = None
    dagger: bool = False
    parts: tuple = ()
    # scale-free bands c_d with weight_d = s * c_d * shift(1/s, d)
    core_bands: tuple = ()
    conjugator: Sequence | None = None

    @property
    def band_map(self) -> dict:
        return dict(self.bands)

    def band(self, d: int) -> Sequence:
        return self.band_map.get(d, sq.ZERO)

    @property
    def simple(self) -> bool:
        return self.core in CORES

    @property
    def effective_core(self) -> str:
        """Core after a dagger has swapped the shift direction."""
        return _SWAP[self.core] if self.dagger else self.core

    @property
    def effective_alpha(self) -> Sequence:
        return sq.conjugate(self.alpha) if self.dagger else self.alpha

    @property
    def effective_scale(self) -> Sequence:
        """The sequence s with op = S (core) S^-1; 1/t for a dagger."""
        return sq.reciprocal(self.scale.t) if self.dagger else self.scale.t

    @property
    def name(self) -> str:
        if self.simple:
            base = _NAMES[self.core]
            if self.form is Form.FORMAL_SERIES:
                base += "_phipsi"
            return base + ("^dagger" if self.dagger else "")
        sym = "*" if self.core == "product" else "-"
        return "(" + sym.join(p.name for p in self.parts) + ")"


def core_bands(core: str, alpha: Sequence) -> tuple:
    """Scale-free bands of the diagonal, lowering or raising core."""
    if core == "diagonal":
        return ((0, alpha),)
    if core == "lower":
        return ((1, sq.shift(alpha, 1)),)
    if core == "raise":
        # output n >= 1 gets alpha_n; alpha_0 is never used
        return ((-1, sq.shift(sq.shift(alpha, 1), -1)),)
    raise ValueError(f"unknown core {core!r}")


def conjugate_bands(cores: tuple, s: Sequence) -> tuple:
    """Weights of ``S (core) S^-1``: output m gets s_m c_d(m) / s_(m+d)."""
    inv = sq.reciprocal(s)
    return tuple((d, sq.prod(s, c, sq.shift(inv, d))) for d, c in cores)


def make_operator(core: str, alpha: Sequence, scale: ScaleOperator,
                  form: Form | str = Form.CONJUGATED, dagger: bool = False) -> OperatorSpec:
    """Build H, A or B (``core`` diagonal, lower, raise) or their daggers.

    A dagger swaps T with T^-1, conjugates alpha and, for the shift cores,
    swaps the shift direction.
    """
    if core not in CORES:
        raise ValueError(f"unknown core {core!r}")
    form = Form(form)
    shell = OperatorSpec((), form, core, scale, alpha, bool(dagger))
    cores = _clean(core_bands(shell.effective_core, shell.effective_alpha))
    s = shell.effective_scale
    return OperatorSpec(_clean(conjugate_bands(cores, s)), form, core, scale, alpha, bool(dagger),
                        core_bands=cores, conjugator=s)


def _clean(bands) -> tuple:
    out = []
    for d, w in sorted(bands, key=lambda b: b[0]):
        if sq.is_zero(w):
            continue
        if isinstance(w, sq.ClosedForm):
            w = w.simplified()
        out.append((d, w))
    return tuple(out)


def _convolve(a_bands, b_bands) -> tuple:
    acc: dict[int, list] = {}
    for da, wa in a_bands:
        for db, wb in b_bands:
            acc.setdefault(da + db, []).append((1, sq.prod(wa, sq.shift(wb, da))))
    return _clean((d, sq.add_all(pairs)) for d, pairs in acc.items())


def _difference(a_bands, b_bands) -> tuple:
    a, b = dict(a_bands), dict(b_bands)
    return _clean((d, sq.add_all([(1, a.get(d, sq.ZERO)), (-1, b.get(d, sq.ZERO))]))
                  for d in set(a) | set(b))


def _shared_conjugator(a: "OperatorSpec", b: "OperatorSpec") -> bool:
    return a.conjugator is not None and b.conjugator is not None and a.conjugator == b.conjugator


def apply(op: OperatorSpec, xi, N: int) -> np.ndarray:
    """First ``N`` output coefficients of ``op`` applied formally to ``xi``."""
    x = _coeffs(xi)
    m = np.arange(N, dtype=np.int64)
    out = np.zeros(N, dtype=complex)
    for d, w in op.bands:
        idx = m + d
        vals = np.zeros(N, dtype=complex)
        ok = idx >= 0
        vals[ok] = x.values_at(idx[ok])
        with np.errstate(invalid="ignore", over="ignore"):
            out = out + np.where(vals != 0, w.values(N) * vals, 0)
    return out


def image(op: OperatorSpec, xi) -> Sequence:
    """The output coefficient sequence of ``op`` on ``xi`` as a Sequence."""
    x = _coeffs(xi)
    return sq.add_all([(1, sq.prod(w, sq.shift(x, d))) for d, w in op.bands])


def basis_vectors(scale: ScaleOperator, n: int) -> tuple[Vector, Vector]:
    """(phi_n, psi_n) = (t_n e_n, t_n^-1 e_n)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    phi = Vector.basis(n, scale.t.eval(n))
    psi = Vector.basis(n, sq.reciprocal(scale.t).eval(n))
    return phi, psi


def biorthogonality_check(scale: ScaleOperator, N: int) -> float:
    """max |(phi_n | psi_m) - delta_nm| over n, m < N."""
    if N < 1:
        raise ValueError("N must be positive")
    phis = np.array([basis_vectors(scale, n)[0].take(N) for n in range(N)])
    psis = np.array([basis_vectors(scale, n)[1].take(N) for n in range(N)])
    gram = phis @ psis.conj().T
    return float(np.max(np.abs(gram - np.eye(N))))


def _check_scale(a: OperatorSpec, b: OperatorSpec):
    if a.scale != b.scale:
        raise ScaleMismatchError("operators are built on different scale operators")


def compose(a: OperatorSpec, b: OperatorSpec) -> OperatorSpec:
    """The product a*b (apply b first) as a band convolution.

    When both operands conjugate by the same scale the inner S^-1 S telescopes,
    so the convolution runs on the scale-free core bands and stays exact.
    """
    _check_scale(a, b)
    if _shared_conjugator(a, b):
        cores = _convolve(a.core_bands, b.core_bands)
        bands = _clean(conjugate_bands(cores, a.conjugator))
        return OperatorSpec(bands, Form.CONJUGATED, "product", a.scale, parts=(a, b),
                            core_bands=cores, conjugator=a.conjugator)
    return OperatorSpec(_convolve(a.bands, b.bands), Form.CONJUGATED, "product", a.scale, parts=(a, b))


def commutator(a: OperatorSpec, b: OperatorSpec) -> OperatorSpec:
    """a*b - b*a, band-wise."""
    ab, ba = compose(a, b), compose(b, a)
    if _shared_conjugator(ab, ba):
        cores = _difference(ab.core_bands, ba.core_bands)
        bands = _clean(conjugate_bands(cores, ab.conjugator))
        return OperatorSpec(bands, Form.CONJUGATED, "difference", a.scale, parts=(ab, ba),
                            core_bands=cores, conjugator=ab.conjugator)
    return OperatorSpec(_difference(ab.bands, ba.bands), Form.CONJUGATED, "difference", a.scale,
                        parts=(ab, ba))


def is_identity(op: OperatorSpec) -> bool:
    """True when the only band is d = 0 with weight exactly constant(1)."""
    bands = op.band_map
    return set(bands) == {0} and bands[0] == sq.constant(1)


def band_matrix(op: OperatorSpec, N: int) -> np.ndarray:
    """N x N truncation of ``op`` in the reference ONB."""
    M = np.zeros((N, N), dtype=complex)
    m = np.arange(N)
    for d, w in op.bands:
        vals = w.values(N)
        cols = m + d
        ok = (cols >= 0) & (cols < N)
        M[m[ok], cols[ok]] = vals[ok]
    return M


def _rel_err(got: np.ndarray, want: np.ndarray) -> float:
    ref = float(np.max(np.abs(want)))
    diff = float(np.max(np.abs(got - want)))
    return diff / ref if ref else diff


def ladder_relations(scale: ScaleOperator, alpha: Sequence, N: int) -> dict:
    """Worst relative errors of the eigen and ladder relations for n < N.

    On phi: H phi_n = a_n phi_n, A phi_(n+1) = a_(n+1) phi_n, A phi_0 = 0,
    B phi_n = a_(n+1) phi_(n+1).  On psi the dagger mirror with conj(a).
    """
    ops = {(c, d): make_operator(c, alpha, scale, dagger=d) for c in CORES for d in (False, True)}
    a = alpha.values(N + 1)
    ac = np.conj(a)
    M = N + 2
    phi = [basis_vectors(scale, n)[0] for n in range(N + 1)]
    psi = [basis_vectors(scale, n)[1] for n in range(N + 1)]
    err = dict.fromkeys(("H_phi", "A_phi", "A_ground", "B_phi", "H_dagger_psi", "A_dagger_psi", "B_dagger_psi"), 0.0)

    def upd(key, got, want):
        err[key] = max(err[key], _rel_err(got, want))

    for n in range(N):
        upd("H_phi", apply(ops["diagonal", False], phi[n], M), a[n] * phi[n].take(M))
        upd("A_phi", apply(ops["lower", False], phi[n + 1], M), a[n + 1] * phi[n].take(M))
        upd("B_phi", apply(ops["raise", False], phi[n], M), a[n + 1] * phi[n + 1].take(M))
        upd("H_dagger_psi", apply(ops["diagonal", True], psi[n], M), ac[n] * psi[n].take(M))
        upd("A_dagger_psi", apply(ops["lower", True], psi[n], M), ac[n + 1] * psi[n + 1].take(M))
        upd("B_dagger_psi", apply(ops["raise", True], psi[n + 1], M), ac[n + 1] * psi[n].take(M))
    err["A_ground"] = float(np.max(np.abs(apply(ops["lower", False], phi[0], M))))
    return err
