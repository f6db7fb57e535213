"""DoS attack models: budget accounting, trace generators, and the greedy attacker.

A budget caps the attacked-step count ("duration") and the number of attack
runs ("frequency") on every prefix [0, k):

    Phi_d(k) <= Pi_d + nu_d * k        Phi_f(k) <= Pi_f + nu_f * k

A run is counted at the step its first attack occurs, which makes both
counters prefix monotone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import inf_norm

__all__ = [
    "DoSBudget",
    "DoSTrace",
    "GreedyAttackParams",
    "GreedyAttacker",
    "validate",
    "periodic_trace",
    "random_trace",
    "clear_trace",
    "save_trace",
    "load_trace",
]


@dataclass(frozen=True)
class DoSBudget:
    """Duration and frequency budget (Pi_d, nu_d, Pi_f, nu_f).

    The default (Pi_f, nu_f) = (1, 0.5) never binds: no boolean sequence can
    start more than 1 + k/2 runs in [0, k).  Pass explicit values to model a
    frequency-constrained attacker.
    """

    Pi_d: float
    nu_d: float
    Pi_f: float = 1.0
    nu_f: float = 0.5

    def __post_init__(self):
        if self.Pi_d < 0 or self.Pi_f < 0:
            raise ValueError("Pi_d and Pi_f must be nonnegative")
        if not 0.0 <= self.nu_d <= 1.0:
            raise ValueError(f"nu_d must lie in [0, 1], got {self.nu_d}")
        if not 0.0 <= self.nu_f <= 0.5:
            raise ValueError(f"nu_f must lie in [0, 0.5], got {self.nu_f}")

    def duration_ok(self, phi_d: int, k: int) -> bool:
        return phi_d <= self.Pi_d + self.nu_d * k

    def frequency_ok(self, phi_f: int, k: int) -> bool:
        return phi_f <= self.Pi_f + self.nu_f * k


@dataclass(frozen=True, eq=False)
class DoSTrace:
    """Boolean attack sequence with its budget."""

    attacked: np.ndarray
    budget: DoSBudget

    def __post_init__(self):
        object.__setattr__(self, "attacked", np.asarray(self.attacked, dtype=bool))

    def __len__(self) -> int:
        return len(self.attacked)

    def duration_counts(self) -> np.ndarray:
        """Phi_d(k) for k = 0..len: attacked steps in [0, k)."""
        return np.concatenate(([0], np.cumsum(self.attacked.astype(int))))

    def frequency_counts(self) -> np.ndarray:
        """Phi_f(k) for k = 0..len: attack runs starting in [0, k)."""
        starts = self.attacked.copy()
        starts[1:] &= ~self.attacked[:-1]
        return np.concatenate(([0], np.cumsum(starts.astype(int))))


def validate(trace: DoSTrace) -> int | None:
    """First prefix length k violating the budget, or None if compliant."""
    phi_d = trace.duration_counts()
    phi_f = trace.frequency_counts()
    budget = trace.budget
    for k in range(len(trace) + 1):
        if not budget.duration_ok(int(phi_d[k]), k):
            return k
        if not budget.frequency_ok(int(phi_f[k]), k):
            return k
    return None


def clear_trace(length: int, budget: DoSBudget | None = None) -> DoSTrace:
    """Attack-free trace (compliant with any budget)."""
    if budget is None:
        budget = DoSBudget(0.0, 0.0)
    return DoSTrace(np.zeros(length, dtype=bool), budget)


def periodic_trace(period: int, offset: int, length: int, budget: DoSBudget) -> DoSTrace:
    """Attacks at offset, offset + period, offset + 2*period, ...

    Raises ValueError when the pattern violates the budget.
    """
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    attacked = np.zeros(length, dtype=bool)
    attacked[offset::period] = True
    trace = DoSTrace(attacked, budget)
    bad = validate(trace)
    if bad is not None:
        raise ValueError(
            f"periodic pattern (period={period}, offset={offset}) violates the "
            f"budget at k={bad}"
        )
    return trace


def random_trace(budget: DoSBudget, seed: int, length: int) -> DoSTrace:
    """Randomized budget-compliant trace that tends to saturate the duration bound.

    Each step attacks with probability equal to the remaining duration slack
    divided by the remaining horizon, but only when attacking keeps both
    prefix inequalities satisfied.  Deterministic under a fixed seed.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    attacked = np.zeros(length, dtype=bool)
    phi_d = 0
    phi_f = 0
    prev = False
    for k in range(length):
        new_run = 0 if prev else 1
        feasible = budget.duration_ok(phi_d + 1, k + 1) and budget.frequency_ok(
            phi_f + new_run, k + 1
        )
        if feasible:
            slack = budget.Pi_d + budget.nu_d * length - phi_d
            prob = min(1.0, max(0.0, slack / (length - k)))
            if rng.random() < prob:
                attacked[k] = True
                phi_d += 1
                phi_f += new_run
        prev = attacked[k]
    trace = DoSTrace(attacked, budget)
    assert validate(trace) is None
    return trace


def save_trace(trace: DoSTrace, path) -> None:
    """Write `k,attacked` lines behind a `#Pi_d,nu_d,Pi_f,nu_f` header."""
    budget = trace.budget
    lines = [f"#{budget.Pi_d!r},{budget.nu_d!r},{budget.Pi_f!r},{budget.nu_f!r}"]
    lines += [f"{k},{int(flag)}" for k, flag in enumerate(trace.attacked)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_trace(path) -> DoSTrace:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing budget header line")
    parts = lines[0][1:].split(",")
    if len(parts) != 4:
        raise ValueError(f"{path}: budget header needs 4 fields, got {len(parts)}")
    budget = DoSBudget(*(float(p) for p in parts))
    attacked = []
    for i, line in enumerate(lines[1:]):
        k_str, flag = line.split(",")
        if int(k_str) != i:
            raise ValueError(f"{path}: non-contiguous step index at line {i + 2}")
        attacked.append(bool(int(flag)))
    return DoSTrace(np.array(attacked, dtype=bool), budget)


@dataclass(frozen=True)
class GreedyAttackParams:
    """Thresholds of the greedy attack rule.

    The attacker strikes when one step of open-loop drift would grow the
    estimation error by more than ``alpha1`` and the current quantization
    error exceeds ``alpha2`` times its worst-case value.
    """

    alpha1: float = 1.0
    alpha2: float = 0.5

    def __post_init__(self):
        if self.alpha1 < 0:
            raise ValueError("alpha1 must be nonnegative")
        if not 0.0 <= self.alpha2 < 1.0:
            raise ValueError(f"alpha2 must lie in [0, 1), got {self.alpha2}")


class GreedyAttacker:
    """Budget-aware adversary with oracle access to the closed-loop state.

    During the zoom-in stage it attacks whenever both greedy conditions hold
    and attacking keeps every budget prefix inequality satisfied.  The
    quantized value entering the second condition is the one the decoder
    would receive if the step were clear, since an attack suppresses the
    transmission entirely.  The attacker stays silent during zoom-out, saving
    its budget for the stage where the rule is defined.
    """

    def __init__(self, budget: DoSBudget, params: GreedyAttackParams):
        self.budget = budget
        self.params = params
        self.history: list[bool] = []
        self._phi_d = 0
        self._phi_f = 0

    @property
    def k(self) -> int:
        return len(self.history)

    def _feasible_now(self) -> bool:
        new_run = 0 if (self.history and self.history[-1]) else 1
        k_next = self.k + 1
        return self.budget.duration_ok(self._phi_d + 1, k_next) and self.budget.frequency_ok(
            self._phi_f + new_run, k_next
        )

    def _record(self, attack: bool) -> None:
        if attack:
            self._phi_d += 1
            if not (self.history and self.history[-1]):
                self._phi_f += 1
        self.history.append(attack)

    def observe_clear(self) -> None:
        """Advance one step without attacking (zoom-out stage)."""
        self._record(False)

    def decide(self, a_matrix, e_k, y_k, q_nominal, bound_e, output_gain: float, n_levels: int) -> bool:
        """Attack decision for one zoom-in step; records the outcome."""
        e_k = np.asarray(e_k, dtype=float)
        grow = inf_norm(np.asarray(a_matrix) @ e_k) > self.params.alpha1 * inf_norm(e_k)
        coarse = inf_norm(np.asarray(y_k) - np.asarray(q_nominal)) > (
            self.params.alpha2 * output_gain * bound_e / n_levels
        )
        attack = grow and coarse and self._feasible_now()
        self._record(attack)
        return attack

    def trace(self) -> DoSTrace:
        """Attack history so far as a validated trace."""
        trace = DoSTrace(np.array(self.history, dtype=bool), self.budget)
        assert validate(trace) is None
        return trace
