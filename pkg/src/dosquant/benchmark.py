"""Unstable batch reactor benchmark: plant, gains, transforms, scheme families.

The continuous-time linearized reactor is discretized with a zero-order hold
at 0.2 s.  The feedback gain is the LQR with identity weights; the observer
gain is the steady-state one-step-predictor Kalman gain for unit process
noise and 0.1-scaled measurement noise.  Three transform policies cover the
published operating points: diagonalize A - LC (estimate-centered simple),
diagonalize A (estimate-centered full), and diagonalize A_cl (origin-centered).
"""

from __future__ import annotations

import numpy as np

from .coder import SchemeFamily, estimate_family, origin_family
from .model import ObserverGains, SystemModel, closed_loop_blocks
from .numerics import kalman_predictor_gain, lqr_gain, zoh_discretize
from .transform import Transform, scaled_jordan_transform

__all__ = [
    "SAMPLING_PERIOD",
    "batch_reactor_continuous",
    "batch_reactor_model",
    "batch_reactor_gains",
    "batch_reactor_transform",
    "batch_reactor_family",
]

SAMPLING_PERIOD = 0.2

_A_CONT = [
    [1.38, -0.2077, 6.715, -5.676],
    [-0.5814, -4.29, 0.0, 0.675],
    [1.067, 4.273, -6.654, 5.893],
    [0.048, 4.273, 1.343, -2.104],
]
_B_CONT = [
    [0.0, 0.0],
    [5.679, 0.0],
    [1.136, -3.146],
    [1.136, 0.0],
]
_C = [
    [1.0, 0.0, 1.0, -1.0],
    [0.0, 1.0, 0.0, 0.0],
]


def batch_reactor_continuous() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Continuous-time (A_c, B_c, C) of the linearized unstable batch reactor."""
    return np.array(_A_CONT), np.array(_B_CONT), np.array(_C)


def batch_reactor_model(h: float = SAMPLING_PERIOD) -> SystemModel:
    a_c, b_c, c = batch_reactor_continuous()
    a, b = zoh_discretize(a_c, b_c, h)
    return SystemModel(A=a, B=b, C=c)


def batch_reactor_gains(model: SystemModel) -> ObserverGains:
    """LQR gain (Q = I, R = I) and predictor-form Kalman gain (I, 0.1 I)."""
    k, _ = lqr_gain(model.A, model.B, np.eye(model.n_x), np.eye(model.n_u))
    l, _ = kalman_predictor_gain(
        model.A, model.C, np.eye(model.n_x), 0.1 * np.eye(model.n_y)
    )
    gains = ObserverGains(K=k, L=l)
    gains.validate(model)
    return gains


def batch_reactor_transform(
    model: SystemModel, gains: ObserverGains, policy: str
) -> Transform:
    """Transform for one of the published R policies.

    policy: "diagonalize-A-LC", "diagonalize-A", or "diagonalize-Acl".
    """
    if policy == "diagonalize-A-LC":
        return scaled_jordan_transform(model.A - gains.L @ model.C, target="A-LC")
    if policy == "diagonalize-A":
        return scaled_jordan_transform(model.A, target="A")
    if policy == "diagonalize-Acl":
        a_cl, _, _, _ = closed_loop_blocks(model, gains)
        return scaled_jordan_transform(a_cl, target="A_cl")
    raise ValueError(f"unknown transform policy {policy!r}")


def batch_reactor_family(
    variant: str,
    model: SystemModel | None = None,
    gains: ObserverGains | None = None,
) -> SchemeFamily:
    """Scheme family at the published operating point for the given variant."""
    if model is None:
        model = batch_reactor_model()
    if gains is None:
        gains = batch_reactor_gains(model)
    if variant == "estimate-simple":
        t = batch_reactor_transform(model, gains, "diagonalize-A-LC")
        return estimate_family(model, gains, t, simple=True)
    if variant == "estimate-full":
        t = batch_reactor_transform(model, gains, "diagonalize-A")
        return estimate_family(model, gains, t, simple=False)
    if variant == "origin-simple":
        t = batch_reactor_transform(model, gains, "diagonalize-Acl")
        return origin_family(model, gains, t, simple=True)
    if variant == "origin-full":
        t = batch_reactor_transform(model, gains, "diagonalize-Acl")
        return origin_family(model, gains, t, simple=False)
    raise ValueError(f"unknown variant {variant!r}")
