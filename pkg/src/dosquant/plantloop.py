"""Closed-loop simulation: plant, DoS-switched observer controller, stage logic.

A run starts in the zoom-out stage (zero input, growing envelope) unless an
initial state bound is supplied, switches to zoom-in once a bound is acquired,
and then runs the synchronized coder pair to the horizon.  Every step is
checked against the closed-form error dynamics and the bound-overapproximation
invariant.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attack import DoSTrace, GreedyAttacker
from .coder import CoderPair, CodingScheme
from .model import ObserverGains, SystemModel, closed_loop_blocks
from .numerics import inf_norm
from .zoomout import ZoomOutCoder, ZoomOutParams

__all__ = [
    "InvariantViolationError",
    "SimTrace",
    "plant_step",
    "controller_step",
    "run_closed_loop",
]

ZOOM_OUT = "zoom-out"
ZOOM_IN = "zoom-in"

#: Absolute-plus-relative tolerance of the per-step invariant checks.
CHECK_TOL = 1e-10


class InvariantViolationError(RuntimeError):
    """A per-step simulation invariant failed: the run is not trustworthy."""


def plant_step(x, u, model: SystemModel) -> tuple[np.ndarray, np.ndarray]:
    """One plant update: returns (x_next, y) with x+ = Ax + Bu and y = Cx."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return model.A @ x + model.B @ u, model.C @ x


def controller_step(
    x_hat, q, model: SystemModel, gains: ObserverGains
) -> tuple[np.ndarray, np.ndarray]:
    """Observer-based controller update with DoS-switched correction.

    Returns (x_hat_next, u).  When no quantized output arrived (q is None) the
    observer runs open loop; otherwise it corrects by the innovation q - C x_hat.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    u = -gains.K @ x_hat
    x_hat_next = model.A @ x_hat + model.B @ u
    if q is not None:
        x_hat_next = x_hat_next + gains.L @ (np.asarray(q, dtype=float) - model.C @ x_hat)
    return x_hat_next, u


@dataclass
class SimTrace:
    """Per-step record of a closed-loop run plus summary statistics."""

    k: np.ndarray
    stage: list[str]
    attacked: np.ndarray
    u: np.ndarray
    y: np.ndarray
    q: np.ndarray  # NaN where no transmission happened
    x_hat: np.ndarray
    x: np.ndarray
    E: np.ndarray
    zoomout_bits: list[int | None]
    acquired: bool
    acquisition_time: int | None
    capture_time: int | None
    initial_zoomin_bound: float | None
    max_abs_x: float
    final_abs_x: float

    def __len__(self) -> int:
        return len(self.k)

    def csv_header(self) -> str:
        def cols(prefix, count):
            return [f"{prefix}{i}" for i in range(count)]

        names = (
            ["k", "stage", "attacked"]
            + cols("u", self.u.shape[1])
            + cols("y", self.y.shape[1])
            + cols("q", self.q.shape[1])
            + cols("xhat", self.x_hat.shape[1])
            + cols("x", self.x.shape[1])
            + ["E"]
        )
        return ",".join(names)

    def to_csv(self, path, config_hash: str | None = None) -> None:
        buf = io.StringIO()
        if config_hash is not None:
            buf.write(f"# config_hash: {config_hash}\n")
        buf.write(self.csv_header() + "\n")
        for i in range(len(self)):
            fields = [str(int(self.k[i])), self.stage[i], str(int(self.attacked[i]))]
            for arr in (self.u, self.y):
                fields += [repr(float(v)) for v in arr[i]]
            for v in self.q[i]:
                fields.append("" if np.isnan(v) else repr(float(v)))
            for arr in (self.x_hat, self.x):
                fields += [repr(float(v)) for v in arr[i]]
            fields.append(repr(float(self.E[i])))
            buf.write(",".join(fields) + "\n")
        Path(path).write_text(buf.getvalue())


class _AttackAdapter:
    """Uniform attack interface over scripted traces and the greedy adversary."""

    def __init__(self, source, horizon: int):
        self.source = source
        if isinstance(source, DoSTrace) and len(source) < horizon:
            raise ValueError(
                f"attack trace of length {len(source)} is shorter than the "
                f"horizon {horizon}"
            )

    def zoomout_step(self, k: int) -> bool:
        if isinstance(self.source, DoSTrace):
            return bool(self.source.attacked[k])
        if isinstance(self.source, GreedyAttacker):
            self.source.observe_clear()
            return False
        return False

    def zoomin_step(self, k, model, e_k, y_k, q_nominal, bound, consts) -> bool:
        if isinstance(self.source, DoSTrace):
            return bool(self.source.attacked[k])
        if isinstance(self.source, GreedyAttacker):
            return self.source.decide(
                model.A, e_k, y_k, q_nominal, bound, consts.output_gain, consts.N
            )
        return False


def _check_close(actual, expected, what: str, k: int):
    err = inf_norm(np.asarray(actual) - np.asarray(expected))
    scale = 1.0 + inf_norm(np.asarray(expected))
    if err > CHECK_TOL * scale:
        raise InvariantViolationError(
            f"{what} deviates by {err:.3e} at step {k} (tolerance {CHECK_TOL:.1e})"
        )


def _check_bounded(value: float, bound: float, what: str, k: int):
    if value > bound + CHECK_TOL * (1.0 + bound):
        raise InvariantViolationError(
            f"{what} {value:.6e} exceeds bound {bound:.6e} at step {k}"
        )


def run_closed_loop(
    model: SystemModel,
    gains: ObserverGains,
    scheme: CodingScheme,
    attack_source,
    x0,
    zoomout: ZoomOutParams | None = None,
    initial_bound: float | None = None,
    horizon: int = 400,
    check_invariants: bool = True,
    rank_tol: float | None = None,
) -> SimTrace:
    """Simulate the full coding pipeline for ``horizon`` steps.

    Exactly one of ``zoomout`` (acquire a bound on |x0| online) and
    ``initial_bound`` (a known bound on |x0|_inf) must be given.  The attack
    source is either a budget-validated ``DoSTrace`` covering the horizon or a
    ``GreedyAttacker``.  Failure to acquire a bound within the horizon is
    reported through ``SimTrace.acquired``, not raised.
    """
    if (zoomout is None) == (initial_bound is None):
        raise ValueError("provide exactly one of zoomout params or initial_bound")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n_x,):
        raise ValueError(f"x0 must have shape ({model.n_x},), got {x0.shape}")
    if initial_bound is not None and inf_norm(x0) > initial_bound:
        raise ValueError("initial_bound does not dominate |x0|_inf")

    adapter = _AttackAdapter(attack_source, horizon)
    family = scheme.family
    consts = scheme.constants
    transform = family.transform
    a_cl, a_op, l_cl, c_cl = closed_loop_blocks(model, gains)
    alc = model.A - gains.L @ model.C

    x = x0.copy()
    x_hat = np.zeros(model.n_x)
    zoom = None
    pair = None
    acquisition_time = None
    initial_zoomin_bound = None
    if zoomout is not None:
        zoom = ZoomOutCoder(model, zoomout, rank_tol)
    else:
        pair = CoderPair(scheme, family.init_gain * initial_bound)
        acquisition_time = 0
        initial_zoomin_bound = family.init_gain * initial_bound

    n = horizon
    rec_stage: list[str] = []
    rec_bits: list[int | None] = []
    rec_attacked = np.zeros(n, dtype=bool)
    rec_u = np.zeros((n, model.n_u))
    rec_y = np.zeros((n, model.n_y))
    rec_q = np.full((n, model.n_y), np.nan)
    rec_xhat = np.zeros((n, model.n_x))
    rec_x = np.zeros((n, model.n_x))
    rec_e = np.zeros(n)

    pending_bound = None
    for k in range(n):
        if pending_bound is not None:
            # hand over to zoom-in with the acquired bound on |x_k|
            initial_zoomin_bound = family.init_gain * pending_bound
            pair = CoderPair(scheme, initial_zoomin_bound)
            acquisition_time = k
            zoom = None
            pending_bound = None
        y = model.C @ x
        rec_x[k] = x
        rec_xhat[k] = x_hat
        rec_y[k] = y

        if pair is None:
            rec_stage.append(ZOOM_OUT)
            rec_e[k] = zoom.E_x
            attacked = adapter.zoomout_step(k)
            bit, bound = zoom.step(y, attacked)
            rec_bits.append(bit)
            rec_attacked[k] = attacked
            u = np.zeros(model.n_u)
            x = model.A @ x + model.B @ u
            rec_u[k] = u
            if bound is not None:
                pending_bound = bound
            continue

        rec_stage.append(ZOOM_IN)
        rec_bits.append(None)
        rec_e[k] = pair.bound
        e_k = x - x_hat
        center = np.zeros(model.n_y) if consts.centered_at_origin else model.C @ x_hat
        q_nominal = pair.nominal_quantized(y, center)
        attacked = adapter.zoomin_step(k, model, e_k, y, q_nominal, pair.bound, consts)
        rec_attacked[k] = attacked

        if check_invariants:
            if consts.centered_at_origin:
                z_r = transform.R @ np.concatenate([x, e_k])
                _check_bounded(inf_norm(z_r), pair.bound, "|z_R|", k)
            else:
                _check_bounded(inf_norm(transform.R @ e_k), pair.bound, "|e_R|", k)

        q = pair.step(y, center, attacked)
        x_next, _ = plant_step(x, -gains.K @ x_hat, model)
        x_hat_next, u = controller_step(x_hat, q, model, gains)
        if q is not None:
            rec_q[k] = q
        rec_u[k] = u

        if check_invariants:
            e_next = x_next - x_hat_next
            if consts.centered_at_origin:
                z_r = transform.R @ np.concatenate([x, e_k])
                if attacked:
                    pred = transform.conjugate(a_op) @ z_r
                else:
                    pred = transform.conjugate(a_cl) @ z_r + transform.R @ l_cl @ (y - q)
                _check_close(
                    transform.R @ np.concatenate([x_next, e_next]), pred,
                    "stacked-state dynamics", k,
                )
            else:
                e_r = transform.R @ e_k
                if attacked:
                    pred = transform.conjugate(model.A) @ e_r
                else:
                    pred = transform.conjugate(alc) @ e_r + transform.R @ gains.L @ (y - q)
                _check_close(transform.R @ e_next, pred, "error dynamics", k)

        x = x_next
        x_hat = x_hat_next

    if pending_bound is not None:
        # bound landed on the final step; zoom-in would start just past the horizon
        acquisition_time = n
        initial_zoomin_bound = family.init_gain * pending_bound

    capture_time = None
    if zoomout is not None:
        last_one = None
        saw_zero = False
        for i, bit in enumerate(rec_bits):
            if rec_stage[i] != ZOOM_OUT:
                break
            if bit == 1:
                last_one = i
            elif bit == 0:
                saw_zero = True
        if saw_zero:
            capture_time = 0 if last_one is None else last_one + 1

    abs_x = np.max(np.abs(rec_x), axis=1)
    return SimTrace(
        k=np.arange(n),
        stage=rec_stage,
        attacked=rec_attacked,
        u=rec_u,
        y=rec_y,
        q=rec_q,
        x_hat=rec_xhat,
        x=rec_x,
        E=rec_e,
        zoomout_bits=rec_bits,
        acquired=acquisition_time is not None,
        acquisition_time=acquisition_time,
        capture_time=capture_time,
        initial_zoomin_bound=initial_zoomin_bound,
        max_abs_x=float(np.max(abs_x)) if n else 0.0,
        final_abs_x=float(abs_x[-1]) if n else 0.0,
    )
