"""Dense matrix backbone: norms, spectra, discretization, Riccati-based gains.

All routines accept real or complex 2-D numpy arrays and are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "inf_norm",
    "spectral_radius",
    "is_schur_stable",
    "expm",
    "zoh_discretize",
    "EigDecomp",
    "eig_decomp",
    "NearDefectiveError",
    "dare_solve",
    "lqr_gain",
    "kalman_predictor_gain",
    "pinv_left",
    "numerical_rank",
]

#: Residual tolerance for the DARE fixed-point check (relative).
DARE_RTOL = 1e-10


class NearDefectiveError(np.linalg.LinAlgError):
    """Eigenvector matrix is too ill-conditioned to trust a diagonalization."""

    def __init__(self, cond: float, threshold: float):
        self.cond = cond
        self.threshold = threshold
        super().__init__(
            f"eigenvector matrix condition {cond:.3e} exceeds threshold "
            f"{threshold:.3e}; matrix is defective or near-defective"
        )


def inf_norm(m) -> float:
    """Induced infinity norm: max absolute row sum (max modulus for vectors)."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    if m.ndim == 1:
        return float(np.max(np.abs(m)))
    if m.ndim != 2:
        raise ValueError(f"expected 1-D or 2-D array, got ndim={m.ndim}")
    return float(np.max(np.sum(np.abs(m), axis=1)))


def spectral_radius(m) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {m.shape}")
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def is_schur_stable(m, margin: float = 0.0) -> bool:
    """True if every eigenvalue lies strictly inside the unit disc."""
    return spectral_radius(m) < 1.0 - margin


def expm(m) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade, via scipy)."""
    return sla.expm(np.asarray(m))


def zoh_discretize(a_c, b_c, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold discretization of dx/dt = A_c x + B_c u at period h.

    Returns (A, B) with A = exp(A_c h) and B = (int_0^h exp(A_c s) ds) B_c,
    computed jointly from the exponential of the augmented matrix
    [[A_c, B_c], [0, 0]].
    """
    a_c = np.asarray(a_c, dtype=float)
    b_c = np.asarray(b_c, dtype=float)
    if h <= 0:
        raise ValueError(f"sampling period must be positive, got {h}")
    n, m = b_c.shape
    if a_c.shape != (n, n):
        raise ValueError(f"dimension mismatch: A_c {a_c.shape}, B_c {b_c.shape}")
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = a_c
    aug[:n, n:] = b_c
    phi = sla.expm(aug * h)
    return phi[:n, :n], phi[:n, n:]


@dataclass(frozen=True, eq=False)
class EigDecomp:
    """Eigendecomposition with a conditioning estimate of the eigenvector basis.

    ``matrix @ vectors == vectors @ diag(eigenvalues)`` up to the residual
    tolerance; ``cond`` is the 2-norm condition number of ``vectors``.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    cond: float

    def residual(self, matrix) -> float:
        lhs = np.asarray(matrix) @ self.vectors
        rhs = self.vectors * self.eigenvalues[np.newaxis, :]
        return inf_norm(lhs - rhs)


def eig_decomp(m) -> EigDecomp:
    """Eigendecomposition with deterministic ordering and phase.

    Eigenpairs are sorted by decreasing modulus, ties broken lexicographically
    by (real, imag).  Each eigenvector is scaled to unit 2-norm with its
    largest-modulus component made real and positive, so repeated calls on the
    same matrix give bit-identical output.
    """
    m = np.asarray(m)
    lam, vec = np.linalg.eig(m)
    order = np.lexsort((lam.imag, lam.real, -np.abs(lam)))
    lam = lam[order]
    vec = vec[:, order]
    # numpy returns unit-norm columns already; pin the phase for reproducibility
    for j in range(vec.shape[1]):
        col = vec[:, j]
        pivot = col[np.argmax(np.abs(col))]
        if pivot != 0:
            vec[:, j] = col * (np.conj(pivot) / np.abs(pivot))
    cond = float(np.linalg.cond(vec))
    return EigDecomp(eigenvalues=lam, vectors=vec, cond=cond)


def dare_solve(a, b, q, r) -> np.ndarray:
    """Stabilizing solution of the discrete algebraic Riccati equation.

    Solves P = A'PA - A'PB (B'PB + R)^-1 B'PA + Q and verifies the fixed
    point to ``DARE_RTOL`` relative accuracy.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    p = sla.solve_discrete_are(a, b, q, r)
    gain = np.linalg.solve(b.T @ p @ b + r, b.T @ p @ a)
    p_next = a.T @ p @ (a - b @ gain) + q
    res = inf_norm(p_next - p)
    scale = max(inf_norm(p), 1.0)
    if res > DARE_RTOL * scale:
        raise np.linalg.LinAlgError(
            f"DARE residual {res:.3e} exceeds {DARE_RTOL:.1e} * {scale:.3e}"
        )
    return p


def lqr_gain(a, b, q, r) -> tuple[np.ndarray, np.ndarray]:
    """LQR state-feedback gain K = (B'PB + R)^-1 B'PA; returns (K, P).

    A - BK is verified Schur stable.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = dare_solve(a, b, q, r)
    k = np.linalg.solve(b.T @ p @ b + np.asarray(r, dtype=float), b.T @ p @ a)
    if not is_schur_stable(a - b @ k):
        raise np.linalg.LinAlgError("LQR synthesis produced an unstable A - BK")
    return k, p


def kalman_predictor_gain(a, c, w, v) -> tuple[np.ndarray, np.ndarray]:
    """Steady-state Kalman gain in one-step predictor form; returns (L, P).

    P solves the dual DARE (a priori error covariance) and
    L = A P C' (C P C' + V)^-1, matching an observer that corrects the
    one-step-ahead prediction.  A - LC is verified Schur stable.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    v = np.asarray(v, dtype=float)
    p = dare_solve(a.T, c.T, w, v)
    l = a @ p @ c.T @ np.linalg.inv(c @ p @ c.T + v)
    if not is_schur_stable(a - l @ c):
        raise np.linalg.LinAlgError("Kalman synthesis produced an unstable A - LC")
    return l, p


def pinv_left(m, rank_tol: float | None = None) -> np.ndarray:
    """Left inverse (M* M)^-1 M* of a full-column-rank matrix, via SVD.

    Raises LinAlgError when the matrix is rank deficient at ``rank_tol``.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("pinv_left expects a 2-D array")
    rank = numerical_rank(m, rank_tol)
    if rank < m.shape[1]:
        raise np.linalg.LinAlgError(
            f"matrix of shape {m.shape} has column rank {rank}; left inverse "
            "requires full column rank"
        )
    return np.linalg.pinv(m)


def numerical_rank(m, tol: float | None = None) -> int:
    """Number of singular values above tol * sigma_max.

    Default tol is max(rows, cols) * machine epsilon.
    """
    m = np.asarray(m)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    if tol is None:
        tol = max(m.shape) * np.finfo(float).eps
    return int(np.sum(s > tol * s[0]))
