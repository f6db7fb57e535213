"""Initial state-bound acquisition under DoS and its feasibility checkers.

While no bound is known the control input is held at zero and a state
envelope grows geometrically, guaranteed to eventually capture the output.
On each clear step the coder transmits one bit saying whether the output is
inside the envelope; captured steps accumulate rows of a generalized
observability matrix, and once that matrix reaches full column rank both
sides derive a sound bound on the upcoming state and hand over to zoom-in.

The module also provides closed-form checkers for when acquisition finishes
in finite time: a consecutive-data condition on duration and frequency, a
duration-only condition, and an eigenvalue-periodicity analysis for
single-output plants, plus the generalized Vandermonde invertibility oracle
backing the latter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attack import DoSBudget
from .model import SystemModel
from .numerics import (
    NearDefectiveError,
    eig_decomp,
    inf_norm,
    numerical_rank,
    pinv_left,
)

__all__ = [
    "ZoomOutParams",
    "ZoomOutCoder",
    "observability_index",
    "CheckerReport",
    "check_thm44",
    "check_prop45",
    "EigenBlock",
    "PeriodicEigReport",
    "periodic_eig_analysis",
    "vandermonde_matrix",
    "vandermonde_invertibility_oracle",
]

#: Relative tolerance when grouping eigenvalue moduli.
MODULUS_RTOL = 1e-9

#: Absolute tolerance on angle/(2*pi) when detecting rational eigenvalue ratios.
ANGLE_ATOL = 1e-9

#: Determinant-modulus threshold for the Vandermonde invertibility test.
VANDERMONDE_DET_TOL = 1e-6


@dataclass(frozen=True)
class ZoomOutParams:
    """Envelope seed E_0^x and growth margin kappa."""

    E0x: float
    kappa: float

    def __post_init__(self):
        if self.E0x <= 0:
            raise ValueError(f"E0x must be positive, got {self.E0x}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


class ZoomOutCoder:
    """State-bound acquisition automaton, run identically on both coder sides.

    Call ``step`` once per time step.  The returned bit is the one-bit channel
    payload (None on attacked steps); the returned bound, once not None, is a
    sound bound on |x|_inf at the *next* step, after which the automaton
    should no longer be stepped.
    """

    def __init__(self, model: SystemModel, params: ZoomOutParams, rank_tol: float | None = None):
        self.model = model
        self.params = params
        self.rank_tol = rank_tol
        self.k = 0
        self.E_x = params.E0x
        self.s0: int | None = None
        self.collected: list[tuple[int, float]] = []
        self.rank = 0
        self._a_pow = None  # A^(k - s0) once s0 is set
        self._rows: list[np.ndarray] = []
        self._growth = (1.0 + params.kappa) * inf_norm(model.A)

    @property
    def E_y(self) -> float:
        return inf_norm(self.model.C) * self.E_x

    def probe_matrix(self) -> np.ndarray:
        """Generalized observability matrix over the collected steps."""
        if not self._rows:
            return np.zeros((0, self.model.n_x))
        return np.vstack(self._rows)

    def step(self, y, attacked: bool) -> tuple[int | None, float | None]:
        bit = None
        bound = None
        if not attacked:
            bit = 0 if inf_norm(y) <= self.E_y else 1
            if bit == 0:
                if self.s0 is None:
                    self.s0 = self.k
                    self._a_pow = np.eye(self.model.n_x)
                self._rows.append(self.model.C @ self._a_pow)
                self.collected.append((self.k, self.E_y))
                probe = self.probe_matrix()
                self.rank = numerical_rank(probe, self.rank_tol)
                if self.rank == self.model.n_x:
                    reach = self._a_pow @ self.model.A  # A^(s_chi - s0 + 1)
                    bound = inf_norm(reach @ pinv_left(probe, self.rank_tol)) * self.E_y
        if self.s0 is not None:
            self._a_pow = self._a_pow @ self.model.A
        self.E_x *= self._growth
        self.k += 1
        return bit, bound


def observability_index(c, a) -> int:
    """Smallest m with rank [C; CA; ...; CA^(m-1)] = n_x.

    Raises LinAlgError for an unobservable pair.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    n = a.shape[0]
    rows = []
    block = c.copy()
    for m in range(1, n + 1):
        rows.append(block)
        if numerical_rank(np.vstack(rows)) == n:
            return m
        block = block @ a
    raise np.linalg.LinAlgError("pair (C, A) is not observable")


def _floor_guarded(x: float) -> int:
    # absorb float rounding on ratios that are exactly integral
    return int(math.floor(x + 1e-9))


@dataclass(frozen=True)
class CheckerReport:
    """Feasibility verdict of a finite-time acquisition condition."""

    condition: str
    feasible: bool
    threshold: float
    k_e: int | None

    def to_text(self) -> str:
        lines = [
            f"condition: {self.condition}",
            f"threshold: {self.threshold!r}",
            f"k_e: {self.k_e if self.k_e is not None else 'none'}",
            f"feasible: {'true' if self.feasible else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def check_thm44(eta: int, budget: DoSBudget) -> CheckerReport:
    """Consecutive-data acquisition under duration and frequency bounds.

    Feasible iff nu_d < 1 - (eta - 1) nu_f; the decoder then receives eta
    consecutive outputs by step k_e + 1 with
    k_e = floor((Pi_d + (Pi_f + 1)(eta - 1)) / (1 - nu_d - (eta - 1) nu_f)).
    The denominator follows the proof of the bound, where both rates are
    subtracted.
    """
    if eta < 1:
        raise ValueError(f"observability index must be >= 1, got {eta}")
    threshold = 1.0 - (eta - 1) * budget.nu_f
    denom = 1.0 - budget.nu_d - (eta - 1) * budget.nu_f
    feasible = budget.nu_d < threshold
    k_e = None
    if feasible and denom > 0:
        k_e = _floor_guarded((budget.Pi_d + (budget.Pi_f + 1) * (eta - 1)) / denom)
    return CheckerReport(
        condition="consecutive-data-duration-frequency",
        feasible=feasible,
        threshold=threshold,
        k_e=k_e,
    )


def check_prop45(eta: int, budget: DoSBudget) -> CheckerReport:
    """Consecutive-data acquisition under a duration bound alone.

    Feasible iff nu_d < 1/eta, with
    k_e = floor(((Pi_d + 1) eta - 1) / (1 - eta nu_d)).
    """
    if eta < 1:
        raise ValueError(f"observability index must be >= 1, got {eta}")
    threshold = 1.0 / eta
    feasible = budget.nu_d < threshold
    k_e = None
    if feasible:
        k_e = _floor_guarded(((budget.Pi_d + 1) * eta - 1.0) / (1.0 - eta * budget.nu_d))
    return CheckerReport(
        condition="consecutive-data-duration-only",
        feasible=feasible,
        threshold=threshold,
        k_e=k_e,
    )


def _small_primes(limit: int) -> list[int]:
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


def _rational_angle(frac: float, denominators: list[int]) -> tuple[int, int] | None:
    """Smallest-denominator p/q approximation of frac within ANGLE_ATOL."""
    frac = frac % 1.0
    for q in denominators:
        p = round(frac * q)
        if abs(frac - p / q) <= ANGLE_ATOL:
            return p % q, q
    return None


@dataclass(frozen=True)
class EigenBlock:
    """One periodicity block: base eigenvalue, period (1 or prime), residues."""

    base: complex
    zeta: int
    residues: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class PeriodicEigReport:
    """Outcome of the eigenvalue-periodicity acquisition analysis.

    When the plant eigenstructure fits the periodic form, ``threshold`` is the
    duration bound 1/zeta below which acquisition finishes in finite time;
    ``sharper_threshold`` applies for a single block.  Otherwise ``status``
    explains why the analysis does not apply.
    """

    status: str
    reason: str = ""
    blocks: tuple[EigenBlock, ...] = ()
    zeta: int | None = None
    threshold: float | None = None
    sharper_threshold: float | None = None
    feasible: bool | None = None

    @property
    def applicable(self) -> bool:
        return self.status == "ok"

    def to_text(self) -> str:
        lines = [f"condition: eigenvalue-periodicity", f"status: {self.status}"]
        if self.reason:
            lines.append(f"reason: {self.reason}")
        if self.applicable:
            lines.append(f"zeta: {self.zeta}")
            lines.append(f"threshold: {self.threshold!r}")
            if self.sharper_threshold is not None:
                lines.append(f"sharper_threshold: {self.sharper_threshold!r}")
            if self.feasible is not None:
                lines.append(f"feasible: {'true' if self.feasible else 'false'}")
        return "\n".join(lines) + "\n"


def _not_met(reason: str) -> PeriodicEigReport:
    return PeriodicEigReport(status="assumption-not-met", reason=reason)


def periodic_eig_analysis(a, c, budget: DoSBudget | None = None) -> PeriodicEigReport:
    """Duration threshold for bound acquisition from the eigenvalue periodicity.

    Requires a single-output plant and a diagonalizable A whose eigenvalues
    split into blocks sharing a modulus, with angles spaced by multiples of
    2*pi/zeta for zeta equal to one or a prime; cross-block ratios must never
    be roots of unity.  Acquisition is then guaranteed for nu_d < 1/lcm(zeta),
    sharpened to (zeta - n + 1)/zeta when there is a single block.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    n = a.shape[0]
    if c.ndim != 2 or c.shape[0] != 1:
        return _not_met("plant is not single-output")
    try:
        dec = eig_decomp(a)
    except np.linalg.LinAlgError:
        return _not_met("eigendecomposition failed")
    if dec.cond > 1e8:
        return _not_met(f"matrix is near-defective (cond {dec.cond:.2e})")
    lam = dec.eigenvalues
    if np.any(np.abs(lam) < 1e-12 * max(np.max(np.abs(lam)), 1.0)):
        return _not_met("zero eigenvalue")

    denominators = [1] + _small_primes(8 * n)
    # group by modulus, then split each group into root-of-unity-ratio blocks
    order = np.argsort(-np.abs(lam))
    groups: list[list[int]] = []
    for idx in order:
        for group in groups:
            ref = abs(lam[group[0]])
            if abs(abs(lam[idx]) - ref) <= MODULUS_RTOL * ref:
                group.append(int(idx))
                break
        else:
            groups.append([int(idx)])

    blocks: list[EigenBlock] = []
    same_modulus_cross_pairs: list[tuple[complex, complex]] = []
    for group in groups:
        members = [lam[i] for i in group]
        assigned: list[list[complex]] = []
        ratios: list[int] = []
        for mu in members:
            placed = False
            for b_idx, block_members in enumerate(assigned):
                frac = np.angle(mu / block_members[0]) / (2 * np.pi)
                match = _rational_angle(frac, denominators)
                if match is not None:
                    p, q = match
                    if q == 1:
                        return _not_met("repeated eigenvalue")
                    if ratios[b_idx] == 0:
                        ratios[b_idx] = q
                    elif ratios[b_idx] != q:
                        return _not_met(
                            "inconsistent periods within an equal-modulus block"
                        )
                    block_members.append(mu)
                    placed = True
                    break
            if not placed:
                assigned.append([mu])
                ratios.append(0)
        # fix block periods: singletons have zeta = 1
        for b_members in assigned:
            if len(b_members) == 1:
                blocks.append(EigenBlock(base=complex(b_members[0]), zeta=1, residues=(0,)))
                continue
            frac = np.angle(b_members[1] / b_members[0]) / (2 * np.pi)
            _, zeta = _rational_angle(frac, denominators)
            residues = [0]
            for mu in b_members[1:]:
                f = np.angle(mu / b_members[0]) / (2 * np.pi)
                match = _rational_angle(f, denominators)
                if match is None or match[1] != zeta:
                    return _not_met(
                        "inconsistent periods within an equal-modulus block"
                    )
                residues.append(match[0])
            if len(set(residues)) != len(residues):
                return _not_met("repeated residue within a block")
            if len(residues) > zeta:
                return _not_met("more eigenvalues than period in a block")
            blocks.append(
                EigenBlock(base=complex(b_members[0]), zeta=zeta, residues=tuple(residues))
            )
        # cross-block pairs within this modulus group feed the ratio check
        for i in range(len(assigned)):
            for j in range(i + 1, len(assigned)):
                same_modulus_cross_pairs.append((assigned[i][0], assigned[j][0]))

    for zeta in (b.zeta for b in blocks):
        if zeta != 1 and not _is_prime(zeta):
            return _not_met(f"block period {zeta} is neither one nor prime")

    zeta_lcm = 1
    for b in blocks:
        zeta_lcm = math.lcm(zeta_lcm, b.zeta)
    ratio_horizon = max(2 * zeta_lcm, 16 * n)
    for mu1, mu2 in same_modulus_cross_pairs:
        ratio = mu1 / mu2
        power = ratio
        for _ in range(ratio_horizon):
            if abs(power - 1.0) <= ANGLE_ATOL:
                return _not_met("cross-block eigenvalue ratio is a root of unity")
            power *= ratio

    threshold = 1.0 / zeta_lcm
    sharper = None
    if len(blocks) == 1:
        b = blocks[0]
        sharper = (b.zeta - b.size + 1) / b.zeta
    feasible = None
    if budget is not None:
        best = sharper if sharper is not None else threshold
        feasible = budget.nu_d < best
    return PeriodicEigReport(
        status="ok",
        blocks=tuple(blocks),
        zeta=zeta_lcm,
        threshold=threshold,
        sharper_threshold=sharper,
        feasible=feasible,
    )


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    for p in range(2, int(q**0.5) + 1):
        if q % p == 0:
            return False
    return True


def vandermonde_matrix(zeta: int, a, b) -> np.ndarray:
    """Generalized Vandermonde matrix with entries exp(2*pi*i a_l b_m / zeta)."""
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    phase = 2j * np.pi / zeta
    return np.exp(phase * np.outer(b, a))


def vandermonde_invertibility_oracle(zeta: int, a, b) -> bool:
    """Numerical invertibility of the generalized Vandermonde matrix.

    Residue lists must have equal length and be pairwise distinct modulo
    zeta.  Invertibility is declared when the determinant modulus of the
    (unit-modulus-entry) matrix exceeds a fixed threshold.
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    if len(a) != len(b):
        raise ValueError("residue lists must have equal length")
    for name, res in (("a", a), ("b", b)):
        if len(set(int(r) % zeta for r in res)) != len(res):
            raise ValueError(f"{name}-residues are not pairwise distinct mod {zeta}")
    det = np.linalg.det(vandermonde_matrix(zeta, a, b))
    return bool(abs(det) > VANDERMONDE_DET_TOL)
