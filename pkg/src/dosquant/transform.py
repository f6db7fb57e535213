"""Coordinate transforms that condition the infinity norm of closed-loop matrices.

A ``Transform`` carries an invertible R together with the matrix it conditions;
``scaled_jordan_transform`` builds R from a (well-conditioned) eigendecomposition
so that the transformed norm collapses to the spectral radius.
``fit_norm_bounds`` certifies geometric decay constants (M0, rho, M) for the
powers of a Schur-stable matrix in the transformed coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    NearDefectiveError,
    eig_decomp,
    inf_norm,
    spectral_radius,
)

__all__ = [
    "Transform",
    "NormBoundCert",
    "TransformError",
    "scaled_jordan_transform",
    "fit_norm_bounds",
]

#: Eigenvector-matrix condition number above which a matrix is treated as defective.
DEFECTIVE_COND_THRESHOLD = 1e8

#: Multiplicative margin added to the spectral radius when fitting decay rates.
DEFAULT_RHO_MARGIN = 1e-3


class TransformError(ValueError):
    """Raised when a requested transform or certificate cannot be built."""


@dataclass(frozen=True, eq=False)
class Transform:
    """Invertible change of coordinates R with its inverse and achieved norm.

    ``achieved_norm`` is the infinity norm of R @ target @ R^-1 for the matrix
    the transform was built to condition.
    """

    R: np.ndarray
    R_inv: np.ndarray
    target: str
    achieved_norm: float

    def __post_init__(self):
        resid = inf_norm(self.R @ self.R_inv - np.eye(self.R.shape[0]))
        if resid > 1e-8:
            raise TransformError(f"R @ R_inv deviates from identity by {resid:.3e}")

    def conjugate(self, m) -> np.ndarray:
        """R @ m @ R^-1."""
        return self.R @ np.asarray(m) @ self.R_inv

    @classmethod
    def from_matrix(cls, r, target_matrix, target: str = "explicit") -> "Transform":
        r = np.asarray(r)
        r_inv = np.linalg.inv(r)
        achieved = inf_norm(r @ np.asarray(target_matrix) @ r_inv)
        return cls(R=r, R_inv=r_inv, target=target, achieved_norm=achieved)


def scaled_jordan_transform(
    xi,
    eps: float = 1e-2,
    cond_threshold: float = DEFECTIVE_COND_THRESHOLD,
    target: str = "Xi",
) -> Transform:
    """Transform R whose conjugation brings ||R Xi R^-1||_inf down to rho(Xi) + eps.

    For a diagonalizable ``xi`` the rows of R are the (unit-norm, deterministically
    phased) left eigenvectors, so the transformed matrix is diagonal and the
    achieved norm equals the spectral radius to working precision.  Matrices
    whose eigenvector basis is ill-conditioned are rejected with
    ``NearDefectiveError`` rather than silently producing a huge R.
    """
    xi = np.asarray(xi)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    dec = eig_decomp(xi)
    if not np.isfinite(dec.cond) or dec.cond > cond_threshold:
        raise NearDefectiveError(dec.cond, cond_threshold)
    r_inv = dec.vectors
    r = np.linalg.inv(r_inv)
    achieved = inf_norm(r @ xi @ r_inv)
    rho = spectral_radius(xi)
    if achieved > rho + eps:
        raise NearDefectiveError(dec.cond, cond_threshold)
    return Transform(R=r, R_inv=r_inv, target=target, achieved_norm=achieved)


@dataclass(frozen=True)
class NormBoundCert:
    """Certificate that transformed powers of a Schur-stable matrix decay.

    Guarantees, for the (transform, stable, gain) triple it was fitted to and
    every power l >= 0:

        ||R stable^l R^-1||_inf   <= M0 * rho^l
        ||R stable^l gain||_inf   <= M  * rho^l

    The bound is exhaustively checked for l = 0..verified_horizon, and the
    block power at l = verified_horizon satisfies
    ||(R stable R^-1)^p||^(1/p) <= tail_ratio * rho with tail_ratio < 1, which
    extends the bound to all l by submultiplicativity.
    """

    M0: float
    M: float
    rho: float
    verified_horizon: int
    tail_ratio: float

    def __post_init__(self):
        if self.M0 < 1.0:
            raise TransformError(f"M0 must be >= 1, got {self.M0}")
        if not 0.0 < self.rho < 1.0:
            raise TransformError(f"rho must lie in (0, 1), got {self.rho}")
        if self.tail_ratio >= 1.0:
            raise TransformError(
                f"tail ratio {self.tail_ratio} fails to certify the bound"
            )

    def verify(self, transform: Transform, stable, gain, horizon: int | None = None) -> bool:
        """Re-check both power bounds exhaustively up to ``horizon``."""
        stable = np.asarray(stable)
        gain = np.asarray(gain)
        if horizon is None:
            horizon = self.verified_horizon
        power = np.eye(stable.shape[0])
        scale = 1.0
        for _ in range(horizon + 1):
            if inf_norm(transform.R @ power @ transform.R_inv) > self.M0 * scale * (1 + 1e-12):
                return False
            if inf_norm(transform.R @ power @ gain) > self.M * scale * (1 + 1e-12):
                return False
            power = power @ stable
            scale *= self.rho
        return True


def fit_norm_bounds(
    transform: Transform,
    stable,
    gain,
    rho: float | None = None,
    rho_margin: float = DEFAULT_RHO_MARGIN,
    max_horizon: int = 200_000,
) -> NormBoundCert:
    """Smallest-M0 decay certificate for the transformed powers of ``stable``.

    The decay rate defaults to spectral_radius(stable) * (1 + rho_margin); pass
    ``rho`` to override (required when the spectral radius is zero).  The
    certifying horizon p is the first block length with
    ||(R stable R^-1)^p||_inf < rho^p, after which submultiplicativity makes the
    fitted constants valid for every power.
    """
    stable = np.asarray(stable)
    gain = np.asarray(gain)
    if rho is None:
        sr = spectral_radius(stable)
        if sr == 0.0:
            rho = 0.5
        else:
            rho = sr * (1.0 + rho_margin)
        if rho >= 1.0:
            raise TransformError(
                f"decay rate {rho:.6f} >= 1 after margin; the matrix is too "
                "close to the unit circle"
            )
    if not 0.0 < rho < 1.0:
        raise TransformError(f"rho must lie in (0, 1), got {rho}")

    y = transform.conjugate(stable)
    m0 = 1.0
    m = inf_norm(transform.R @ gain)
    power = np.eye(stable.shape[0], dtype=y.dtype)
    log_rho = np.log(rho)
    horizon = None
    for ell in range(1, max_horizon + 1):
        power = power @ stable
        log_scale = ell * log_rho
        norm_p = inf_norm(transform.R @ power @ transform.R_inv)
        norm_g = inf_norm(transform.R @ power @ gain)
        if norm_p > 0:
            m0 = max(m0, np.exp(np.log(norm_p) - log_scale))
        if norm_g > 0:
            m = max(m, np.exp(np.log(norm_g) - log_scale))
        if norm_p == 0.0 or np.log(norm_p) < log_scale:
            horizon = ell
            tail = 0.0 if norm_p == 0.0 else np.exp(np.log(norm_p) / ell) / rho
            break
    if horizon is None:
        raise TransformError(
            f"no certifying block length found within {max_horizon} powers; "
            "rho is too close to the spectral radius"
        )
    return NormBoundCert(M0=m0, M=m, rho=rho, verified_horizon=horizon, tail_ratio=tail)
