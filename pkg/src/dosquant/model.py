"""Plant and gain containers shared across the coder, loop, and analysis layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import is_schur_stable

__all__ = ["SystemModel", "ObserverGains", "closed_loop_blocks"]


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Discrete LTI plant x+ = A x + B u, y = C x."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.ndim != 2 or self.B.shape[0] != n:
            raise ValueError(f"B must be {n}xm, got {self.B.shape}")
        if self.C.ndim != 2 or self.C.shape[1] != n:
            raise ValueError(f"C must be px{n}, got {self.C.shape}")
        for name in ("A", "B", "C"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class ObserverGains:
    """Feedback gain K and observer gain L; A-BK and A-LC must be Schur stable."""

    K: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float))
        object.__setattr__(self, "L", np.asarray(self.L, dtype=float))

    def validate(self, model: SystemModel) -> None:
        if self.K.shape != (model.n_u, model.n_x):
            raise ValueError(f"K must be {model.n_u}x{model.n_x}, got {self.K.shape}")
        if self.L.shape != (model.n_x, model.n_y):
            raise ValueError(f"L must be {model.n_x}x{model.n_y}, got {self.L.shape}")
        if not is_schur_stable(model.A - model.B @ self.K):
            raise ValueError("A - BK is not Schur stable")
        if not is_schur_stable(model.A - self.L @ model.C):
            raise ValueError("A - LC is not Schur stable")


def closed_loop_blocks(model: SystemModel, gains: ObserverGains):
    """Block matrices of the stacked state z = [x; e] used by origin-centered coding.

    Returns (A_cl, A_op, L_cl, C_cl): the closed-loop map on clear steps, the
    map under an attack, the stacked observer gain, and the stacked output map.
    """
    n = model.n_x
    abk = model.A - model.B @ gains.K
    bk = model.B @ gains.K
    alc = model.A - gains.L @ model.C
    zero = np.zeros((n, n))
    a_cl = np.block([[abk, bk], [zero, alc]])
    a_op = np.block([[abk, bk], [zero, model.A]])
    l_cl = np.vstack([np.zeros((n, model.n_y)), gains.L])
    c_cl = np.hstack([model.C, np.zeros((model.n_y, n))])
    return a_cl, a_op, l_cl, c_cl
