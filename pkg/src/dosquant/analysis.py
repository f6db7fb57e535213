"""Closed-form stability conditions and parameter-space sweeps.

For a scheme family with constants (growth_attack, M0, rho, M, output_gain)
the zoom-in bound contracts whenever

    N  >  M * output_gain / (1 - rho)
    nu_d < intercept(N) + slope(N) * nu_f

with intercept = log(1/theta) / log(theta_a/theta) and
slope = -log(theta_0/theta) / log(theta_a/theta).  Simple variants have
theta_0 = theta, so their slope is zero and the frequency bound is irrelevant.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .attack import DoSBudget
from .coder import SchemeConstants, SchemeFamily, derive_constants

__all__ = [
    "StabilityVerdict",
    "MinNResult",
    "Frontier",
    "frontier_line",
    "asymptote",
    "verdict",
    "min_N",
    "sweep_frontier",
]

#: Quantization levels above this cap are reported as unreachable.
N_CAP = 10**6


def frontier_line(consts: SchemeConstants) -> tuple[float, float]:
    """(intercept, slope) of the admissible-duration line nu_d < i + s * nu_f."""
    theta_a = consts.growth_attack
    theta_0 = consts.growth_first
    theta = consts.contraction
    if theta <= 0 or theta_a <= theta:
        raise ValueError("constants do not define a frontier (need theta_a > theta > 0)")
    denom = math.log(theta_a / theta)
    return -math.log(theta) / denom, -math.log(theta_0 / theta) / denom


def asymptote(family: SchemeFamily) -> tuple[float, float]:
    """Frontier line in the infinite-quantization limit: theta -> rho."""
    theta_a = family.growth_attack
    rho = family.rho
    if theta_a <= rho:
        raise ValueError("growth rate under attack must exceed the decay rate")
    denom = math.log(theta_a) - math.log(rho)
    return -math.log(rho) / denom, -math.log(family.M0) / denom


@dataclass(frozen=True)
class StabilityVerdict:
    """Feasibility of a (N, budget) combination for one scheme family."""

    variant: str
    N: int
    N_floor: int
    contractive: bool
    intercept: float
    slope: float
    nu_d_max: float
    feasible: bool
    budget: DoSBudget

    def to_text(self) -> str:
        lines = [
            f"variant: {self.variant}",
            f"N: {self.N}",
            f"N_floor: {self.N_floor}",
            f"contractive: {'true' if self.contractive else 'false'}",
            f"intercept: {self.intercept!r}",
            f"slope: {self.slope!r}",
            f"nu_d_max: {self.nu_d_max!r}",
            f"nu_d: {self.budget.nu_d!r}",
            f"nu_f: {self.budget.nu_f!r}",
            f"feasible: {'true' if self.feasible else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def verdict(family: SchemeFamily, n_levels: int, budget: DoSBudget) -> StabilityVerdict:
    """Evaluate the contraction condition of the family at level N and budget.

    Simple variants ignore the frequency component of the budget (their slope
    is identically zero).
    """
    consts = derive_constants(family, n_levels)
    n_floor = family.n_floor()
    if consts.contractive:
        intercept, slope = frontier_line(consts)
    else:
        intercept, slope = float("-inf"), 0.0
    nu_f = 0.0 if family.simple else budget.nu_f
    nu_d_max = intercept + slope * nu_f
    feasible = consts.contractive and budget.nu_d < nu_d_max
    return StabilityVerdict(
        variant=family.variant,
        N=n_levels,
        N_floor=n_floor,
        contractive=consts.contractive,
        intercept=intercept,
        slope=slope,
        nu_d_max=nu_d_max,
        feasible=feasible,
        budget=budget,
    )


@dataclass(frozen=True)
class MinNResult:
    """Outcome of the minimum quantization level search."""

    N: int | None
    status: str  # "ok" | "beyond-asymptote" | "cap-exceeded"


def min_N(family: SchemeFamily, budget: DoSBudget, parity: str = "any") -> MinNResult:
    """Least quantization level whose verdict is feasible for the budget.

    ``parity`` is "any" (every integer competes, matching the published
    threshold curves) or "odd" (what the combined zoom-out pipeline requires).
    Budgets on or beyond the infinite-N asymptote are infeasible at any level.
    """
    if parity not in ("any", "odd"):
        raise ValueError(f"parity must be 'any' or 'odd', got {parity}")
    icpt, slope = asymptote(family)
    nu_f = 0.0 if family.simple else budget.nu_f
    if budget.nu_d >= icpt + slope * nu_f:
        return MinNResult(N=None, status="beyond-asymptote")

    # search over an index m so that parity constraints stay out of the
    # bisection: N = m for "any", N = 2m + 1 for "odd"
    if parity == "odd":
        level = lambda m: 2 * m + 1
        first = max(family.n_floor() // 2, 1)  # N >= 3: a 1-cell quantizer is useless
    else:
        level = lambda m: m
        first = max(family.n_floor(), 1)

    def feasible(m: int) -> bool:
        return verdict(family, level(m), budget).feasible

    hi = max(first, 1)
    while not feasible(hi):
        hi = 2 * hi + 1
        if level(hi) > N_CAP:
            return MinNResult(N=None, status="cap-exceeded")
    low, high = max(first, 1), hi
    while low < high:
        mid = (low + high) // 2
        if feasible(mid):
            high = mid
        else:
            low = mid + 1
    return MinNResult(N=level(low), status="ok")


@dataclass(frozen=True, eq=False)
class Frontier:
    """Minimum N over a (nu_d, nu_f) grid, with the infinite-N asymptote."""

    variant: str
    nu_d: np.ndarray
    nu_f: np.ndarray
    min_n: np.ndarray  # -1 encodes infeasible
    asymptote: tuple[float, float]

    def to_csv(self, path, config_hash: str | None = None) -> None:
        buf = io.StringIO()
        if config_hash is not None:
            buf.write(f"# config_hash: {config_hash}\n")
        buf.write("nu_d,nu_f,min_N,feasible\n")
        for i, nd in enumerate(self.nu_d):
            for j, nf in enumerate(self.nu_f):
                n = int(self.min_n[i, j])
                feas = n >= 0
                buf.write(
                    f"{float(nd)!r},{float(nf)!r},{n if feas else ''},{int(feas)}\n"
                )
        from pathlib import Path

        Path(path).write_text(buf.getvalue())

    def sidecar(self, path) -> None:
        from pathlib import Path

        payload = {
            "variant": self.variant,
            "asymptote": {"intercept": self.asymptote[0], "slope": self.asymptote[1]},
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sweep_frontier(
    family: SchemeFamily,
    nu_d_grid,
    nu_f_grid=(0.0,),
    Pi_d: float = 0.0,
    Pi_f: float = 0.0,
    parity: str = "any",
) -> Frontier:
    """Minimum feasible N for every (nu_d, nu_f) grid point."""
    nu_d_grid = np.asarray(nu_d_grid, dtype=float)
    nu_f_grid = np.asarray(nu_f_grid, dtype=float)
    table = np.full((len(nu_d_grid), len(nu_f_grid)), -1, dtype=int)
    for i, nd in enumerate(nu_d_grid):
        for j, nf in enumerate(nu_f_grid):
            res = min_N(family, DoSBudget(Pi_d, float(nd), Pi_f, float(nf)), parity)
            if res.status == "ok":
                table[i, j] = res.N
    return Frontier(
        variant=family.variant,
        nu_d=nu_d_grid,
        nu_f=nu_f_grid,
        min_n=table,
        asymptote=asymptote(family),
    )
