"""Dense finite-order realizations: Jacobi SVD, polar decomposition, truncations.

At finite order an invertible T has a unitary polar factor, and the operator
families built from T can be compared as plain matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import ScaleOperator
from .seq import Sequence

SWEEP_CAP = 30
OFF_DIAGONAL_TOL = 1e-14
MAX_ORDER = 64
_TAGS = ("general", "unitary", "positive")


class SingularMatrixError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Square complex matrix with a structural tag checked on construction."""

    data: np.ndarray
    tag: str = "general"

    def __post_init__(self):
        a = np.array(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("DenseMatrix must be square")
        if self.tag not in _TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)
        if self.tag == "unitary":
            err = _maxabs(a @ a.conj().T - np.eye(len(a)))
            if err > 1e-10:
                raise ValueError(f"matrix tagged unitary is off by {err:.2e}")
        elif self.tag == "positive":
            herm = _maxabs(a - a.conj().T)
            if herm > 1e-12 * max(1.0, _maxabs(a)):
                raise ValueError(f"matrix tagged positive is not Hermitian ({herm:.2e})")
            if np.linalg.eigvalsh(a).min() < -1e-10:
                raise ValueError("matrix tagged positive has a negative eigenvalue")

    @property
    def order(self) -> int:
        return self.data.shape[0]

    @property
    def H(self) -> np.ndarray:
        return self.data.conj().T

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _as_array(M) -> np.ndarray:
    return M.data if isinstance(M, DenseMatrix) else np.asarray(M, dtype=complex)


def _complete_basis(U: np.ndarray, filled: np.ndarray) -> np.ndarray:
    # Gram-Schmidt against the standard basis for columns with zero singular value
    U = U.copy()
    n = U.shape[0]
    good = list(np.flatnonzero(filled))
    for j in np.flatnonzero(~filled):
        for k in range(n):
            v = np.zeros(n, dtype=complex)
            v[k] = 1.0
            for g in good:
                v -= (U[:, g].conj() @ v) * U[:, g]
            for g in good:
                v -= (U[:, g].conj() @ v) * U[:, g]
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                U[:, j] = v / nv
                good.append(j)
                break
    return U


def svd_small(M) -> tuple[DenseMatrix, np.ndarray, DenseMatrix]:
    """One-sided (Hestenes) Jacobi SVD: ``M = U diag(S) V^H``.

    Singular values come out nonincreasing.  Each left singular vector is
    normalized so its first nonzero component has nonnegative real part.
    """
    A = _as_array(M).copy()
    n = A.shape[0]
    if n > MAX_ORDER:
        raise ValueError(f"order {n} exceeds {MAX_ORDER}")
    V = np.eye(n, dtype=complex)
    off = 0.0
    for _ in range(SWEEP_CAP):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(np.real(np.vdot(A[:, p], A[:, p])))
                beta = float(np.real(np.vdot(A[:, q], A[:, q])))
                gamma = np.vdot(A[:, p], A[:, q])
                g = abs(gamma)
                if g == 0.0 or alpha == 0.0 or beta == 0.0:
                    continue
                rel = g / np.sqrt(alpha * beta)
                off = max(off, rel)
                if rel < OFF_DIAGONAL_TOL:
                    continue
                phase = gamma / g
                zeta = (beta - alpha) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for X in (A, V):
                    xp, xq = X[:, p].copy(), X[:, q] / phase
                    X[:, p] = c * xp - s * xq
                    X[:, q] = s * xp + c * xq
        if off < OFF_DIAGONAL_TOL:
            break
    else:
        raise ConvergenceError("Jacobi SVD did not converge within the sweep cap", off)

    S = np.linalg.norm(A, axis=0)
    order = np.argsort(-S, kind="stable")
    S, A, V = S[order], A[:, order], V[:, order]
    scale = S[0] if n and S[0] > 0 else 1.0
    filled = S > 1e-15 * scale
    U = np.zeros_like(A)
    U[:, filled] = A[:, filled] / S[filled]
    if not filled.all():
        U = _complete_basis(U, filled)
        S = np.where(filled, S, 0.0)
    for j in range(n):
        nz = np.flatnonzero(np.abs(U[:, j]) > 1e-14)
        if nz.size and U[nz[0], j].real < 0:
            U[:, j] *= -1
            V[:, j] *= -1
    return DenseMatrix(U, "unitary"), S, DenseMatrix(V, "unitary")


def svd_residual(M, U, S, V) -> float:
    return _maxabs(_as_array(U) @ np.diag(S) @ _as_array(V).conj().T - _as_array(M))


@dataclass(frozen=True)
class Polar:
    """T* = U P with U unitary and P = |T*| positive."""

    U: DenseMatrix
    P: DenseMatrix
    P_inv: np.ndarray
    singular_values: np.ndarray


def polar_decompose(T, min_singular: float = 1e-12) -> Polar:
    """Polar factors of the adjoint of ``T``: ``T* = U |T*|``."""
    Tstar = _as_array(T).conj().T
    W, S, V = svd_small(Tstar)
    if S[-1] <= min_singular:
        raise SingularMatrixError(f"smallest singular value {S[-1]:.3e} is below {min_singular:g}")
    Vd = V.data
    P = Vd @ np.diag(S) @ Vd.conj().T
    P = (P + P.conj().T) / 2
    P_inv = Vd @ np.diag(1.0 / S) @ Vd.conj().T
    U = W.data @ Vd.conj().T
    return Polar(DenseMatrix(U, "unitary"), DenseMatrix(P, "positive"), P_inv, S)


@dataclass(frozen=True)
class Lemma22Report:
    order: int
    polar_residual: float
    phi_residual: float
    psi_residual: float
    orthonormality: float
    biorthogonality: float

    def passed(self, scale: float = 1.0) -> bool:
        return (self.polar_residual <= 1e-10 * scale and self.phi_residual <= 1e-9 * scale
                and self.psi_residual <= 1e-9 * scale and self.orthonormality <= 1e-10 * scale
                and self.biorthogonality <= 1e-10 * scale)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("order", "polar_residual", "phi_residual", "psi_residual", "orthonormality", "biorthogonality")}


def _vector_residual(X: np.ndarray, Y: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(X - Y, axis=0)))


def lemma22_check(T) -> Lemma22Report:
    """Check phi_n = |T*| e'_n and psi_n = |T*|^-1 e'_n with e'_n = U* e_n.

    phi_n are the columns of T, psi_n the columns of (T^-1)*, and e'_n the
    columns of U*.
    """
    T = _as_array(T)
    pol = polar_decompose(T)
    U, P = pol.U.data, pol.P.data
    E = U.conj().T
    phi = T
    psi = np.linalg.inv(T).conj().T
    N = len(T)
    return Lemma22Report(
        order=N,
        polar_residual=_maxabs(U @ P - T.conj().T),
        phi_residual=_vector_residual(phi, P @ E),
        psi_residual=_vector_residual(psi, pol.P_inv @ E),
        orthonormality=_maxabs(E.conj().T @ E - np.eye(N)),
        biorthogonality=_maxabs(psi.conj().T @ phi - np.eye(N)),
    )


# ---------------------------------------------------------------------------
# operator matrices at finite order


def truncate(scale: ScaleOperator, N: int) -> DenseMatrix:
    """diag(t_0, ..., t_{N-1})."""
    if N < 1:
        raise ValueError("N must be positive")
    return DenseMatrix(np.diag(scale.t.values(N).real), "positive")


def _core_matrices(alpha: np.ndarray, N: int) -> dict:
    """Scale-free cores; ``alpha`` holds alpha_0 .. alpha_N."""
    D = np.diag(alpha[:N])
    L = np.zeros((N, N), dtype=complex)
    idx = np.arange(N - 1)
    L[idx, idx + 1] = alpha[1:N]
    return {"H": D, "A": L, "B": L.T.copy()}


def operator_matrices(T, alpha: Sequence, N: int | None = None) -> dict:
    """Matrices of H, A, B, their formal-series twins and their daggers.

    Conjugated forms are ``T core T^-1``; formal-series forms are sums of
    rank-one terms ``phi_j psi_k^H``; daggers are ``T^-1 core^H T``.
    """
    T = _as_array(T)
    N = len(T) if N is None else N
    if N != len(T):
        raise ValueError("N must equal the order of T")
    Tinv = np.linalg.inv(T)
    a = alpha.values(N + 1)
    cores = _core_matrices(a, N)
    phi, psi = T, Tinv.conj().T
    out = {}
    for name, C in cores.items():
        out[name] = T @ C @ Tinv
        F = np.zeros((N, N), dtype=complex)
        rows, cols = np.nonzero(C)
        for j, k in zip(rows, cols):
            F += C[j, k] * np.outer(phi[:, j], psi[:, k].conj())
        out[name + "_phipsi"] = F
        out[name + "_dagger"] = Tinv @ C.conj().T @ T
    return out


def is_hermitian_positive(T, tol: float = 1e-12) -> bool:
    T = _as_array(T)
    if _maxabs(T - T.conj().T) > tol * max(1.0, _maxabs(T)):
        return False
    return bool(np.linalg.eigvalsh((T + T.conj().T) / 2).min() > 0)


@dataclass(frozen=True)
class RieszConsistencyReport:
    order: int
    form_differences: dict
    adjoint_checked: bool
    adjoint_differences: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        vals = list(self.form_differences.values()) + list(self.adjoint_differences.values())
        return all(v <= self.tolerance for v in vals)

    def to_dict(self) -> dict:
        return {"order": self.order, "form_differences": dict(self.form_differences),
                "adjoint_checked": self.adjoint_checked,
                "adjoint_differences": dict(self.adjoint_differences),
                "tolerance": self.tolerance, "passed": self.passed}


def riesz_consistency_check(T, alpha: Sequence, N: int | None = None, tol: float = 1e-10) -> RieszConsistencyReport:
    """Finite-order checks that conjugated and formal-series forms agree.

    The adjoint comparison ``X^H == X_dagger`` is only meaningful for a
    Hermitian positive T and is skipped otherwise.
    """
    T = _as_array(T)
    polar_decompose(T)  # raises on singular input
    mats = operator_matrices(T, alpha, N)
    scale = max(1.0, max(_maxabs(m) for m in mats.values()))
    forms = {k: _maxabs(mats[k] - mats[k + "_phipsi"]) / scale for k in ("H", "A", "B")}
    herm = is_hermitian_positive(T)
    adj = {k: _maxabs(mats[k].conj().T - mats[k + "_dagger"]) / scale for k in ("H", "A", "B")} if herm else {}
    return RieszConsistencyReport(len(T), forms, herm, adj, tol)


@dataclass(frozen=True)
class LadderProductReport:
    order: int
    lower_raise: float
    raise_lower: float

    def passed(self, tol: float = 1e-12) -> bool:
        return self.lower_raise <= tol and self.raise_lower <= tol


def ladder_product_check(T, alpha: Sequence) -> LadderProductReport:
    """Finite-order products of the shift operators.

    Compares ``T^-1 (A B) T`` with diag(alpha_{n+1}^2) and ``T^-1 (B A) T``
    with diag(alpha_n^2, alpha_0 -> 0) on the leading (N-1) x (N-1) block,
    relative to the largest diagonal entry.  The last row and column see the
    truncated shift and are excluded.
    """
    T = _as_array(T)
    N = len(T)
    mats = operator_matrices(T, alpha)
    Tinv = np.linalg.inv(T)
    a = alpha.values(N + 1)
    ab = Tinv @ (mats["A"] @ mats["B"]) @ T
    ba = Tinv @ (mats["B"] @ mats["A"]) @ T
    want_ab = np.diag(a[1 : N + 1] ** 2)
    want_ba = np.diag(np.concatenate([[0], a[1:N] ** 2]))
    k = N - 1
    ref = max(1.0, _maxabs(want_ab))
    return LadderProductReport(N, _maxabs((ab - want_ab)[:k, :k]) / ref, _maxabs((ba - want_ba)[:k, :k]) / ref)


# ---------------------------------------------------------------------------
# random ensembles


def random_invertible(order: int, rng: np.random.Generator, min_singular: float = 1e-3) -> np.ndarray:
    """Complex Gaussian matrix, redrawn until reasonably conditioned."""
    while True:
        M = (rng.standard_normal((order, order)) + 1j * rng.standard_normal((order, order))) / np.sqrt(2)
        if np.linalg.svd(M, compute_uv=False).min() > min_singular:
            return M


def random_hermitian_positive(order: int, rng: np.random.Generator, floor: float = 0.1) -> np.ndarray:
    G = (rng.standard_normal((order, order)) + 1j * rng.standard_normal((order, order))) / np.sqrt(2)
    M = G @ G.conj().T / order + floor * np.eye(order)
    return (M + M.conj().T) / 2
