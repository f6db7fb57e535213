"""Zooming-in error-bound state machines and the synchronized coder pair.

Four scheme variants share one recursion on the bound E:

    E <- growth_attack * E   on an attacked step
    E <- growth_first  * E   on the first step, or right after an attack
    E <- contraction   * E   otherwise

Estimate-centered schemes bound the transformed estimation error e_R = R e;
origin-centered schemes bound the transformed stacked state z_R = R_cl [x; e].
"Simple" variants use the one-step norm as decay rate, which makes
growth_first equal contraction and removes any dependence on attack frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import ObserverGains, SystemModel, closed_loop_blocks
from .numerics import inf_norm
from .quantizer import QuantRegion, QuantizerSpec, decode, encode
from .transform import NormBoundCert, Transform, TransformError, fit_norm_bounds

__all__ = [
    "VARIANTS",
    "SchemeFamily",
    "SchemeConstants",
    "CodingScheme",
    "CoderState",
    "CoderPair",
    "estimate_family",
    "origin_family",
    "derive_constants",
    "next_bound",
]

VARIANTS = ("estimate-full", "estimate-simple", "origin-full", "origin-simple")


@dataclass(frozen=True, eq=False)
class SchemeFamily:
    """N-independent scheme data: growth rate under attack, decay certificate,
    and the output gain that scales the quantization region."""

    variant: str
    growth_attack: float
    M0: float
    rho: float
    M: float
    output_gain: float
    transform: Transform
    init_gain: float  # ||R||_inf, maps a state bound to the transformed bound

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def simple(self) -> bool:
        return self.variant.endswith("-simple")

    @property
    def centered_at_origin(self) -> bool:
        return self.variant.startswith("origin-")

    def n_floor(self) -> int:
        """Smallest integer N making the clear-step rate contractive."""
        if self.rho >= 1.0:
            raise TransformError(f"decay rate {self.rho} >= 1; no N can contract")
        return int(np.floor(self.M * self.output_gain / (1.0 - self.rho))) + 1


@dataclass(frozen=True)
class SchemeConstants:
    """Per-step growth/contraction factors of the bound recursion at a given N."""

    variant: str
    growth_attack: float
    growth_first: float
    contraction: float
    N: int
    output_gain: float

    @property
    def contractive(self) -> bool:
        return self.contraction < 1.0

    @property
    def simple(self) -> bool:
        return self.variant.endswith("-simple")

    @property
    def centered_at_origin(self) -> bool:
        return self.variant.startswith("origin-")


def estimate_family(
    model: SystemModel,
    gains: ObserverGains,
    transform: Transform,
    cert: NormBoundCert | None = None,
    simple: bool = False,
) -> SchemeFamily:
    """Estimate-centered scheme family for a transform conditioning A - LC.

    Simple variant: decay rate is the one-step norm ||R(A-LC)R^-1||, which must
    be < 1, with M0 = 1 and M = ||RL||.  Full variant: decay certificate fitted
    over the powers of A - LC (or supplied explicitly).
    """
    alc = model.A - gains.L @ model.C
    growth_attack = inf_norm(transform.conjugate(model.A))
    output_gain = inf_norm(model.C @ transform.R_inv)
    init_gain = inf_norm(transform.R)
    if simple:
        rho = inf_norm(transform.conjugate(alc))
        if rho >= 1.0:
            raise TransformError(
                f"simple scheme needs ||R(A-LC)R^-1|| < 1, got {rho:.6f}"
            )
        return SchemeFamily(
            variant="estimate-simple",
            growth_attack=growth_attack,
            M0=1.0,
            rho=rho,
            M=inf_norm(transform.R @ gains.L),
            output_gain=output_gain,
            transform=transform,
            init_gain=init_gain,
        )
    if cert is None:
        cert = fit_norm_bounds(transform, alc, gains.L)
    return SchemeFamily(
        variant="estimate-full",
        growth_attack=growth_attack,
        M0=cert.M0,
        rho=cert.rho,
        M=cert.M,
        output_gain=output_gain,
        transform=transform,
        init_gain=init_gain,
    )


def origin_family(
    model: SystemModel,
    gains: ObserverGains,
    transform: Transform,
    cert: NormBoundCert | None = None,
    simple: bool = False,
) -> SchemeFamily:
    """Origin-centered scheme family for a transform conditioning A_cl.

    The recursion runs on the stacked state z = [x; e], whose clear-step map is
    A_cl and attacked-step map is A_op.
    """
    a_cl, a_op, l_cl, c_cl = closed_loop_blocks(model, gains)
    if transform.R.shape[0] != 2 * model.n_x:
        raise TransformError(
            f"origin-centered transform must act on the {2 * model.n_x}-dim "
            f"stacked state, got {transform.R.shape}"
        )
    growth_attack = inf_norm(transform.conjugate(a_op))
    output_gain = inf_norm(c_cl @ transform.R_inv)
    init_gain = inf_norm(transform.R)
    if simple:
        rho = inf_norm(transform.conjugate(a_cl))
        if rho >= 1.0:
            raise TransformError(
                f"simple scheme needs ||R A_cl R^-1|| < 1, got {rho:.6f}"
            )
        return SchemeFamily(
            variant="origin-simple",
            growth_attack=growth_attack,
            M0=1.0,
            rho=rho,
            M=inf_norm(transform.R @ l_cl),
            output_gain=output_gain,
            transform=transform,
            init_gain=init_gain,
        )
    if cert is None:
        cert = fit_norm_bounds(transform, a_cl, l_cl)
    return SchemeFamily(
        variant="origin-full",
        growth_attack=growth_attack,
        M0=cert.M0,
        rho=cert.rho,
        M=cert.M,
        output_gain=output_gain,
        transform=transform,
        init_gain=init_gain,
    )


def derive_constants(family: SchemeFamily, n_levels: int) -> SchemeConstants:
    """Growth/contraction constants of the bound recursion at quantization level N.

    The constants are returned even when N is below the contraction floor; the
    result is then flagged non-contractive via ``SchemeConstants.contractive``.
    """
    if n_levels < 1:
        raise ValueError(f"N must be >= 1, got {n_levels}")
    delta = family.M * family.output_gain / n_levels
    return SchemeConstants(
        variant=family.variant,
        growth_attack=family.growth_attack,
        growth_first=family.M0 * family.rho + delta,
        contraction=family.rho + delta,
        N=n_levels,
        output_gain=family.output_gain,
    )


def next_bound(bound: float, attacked: bool, first_branch: bool, consts: SchemeConstants) -> float:
    """One step of the bound recursion.

    ``first_branch`` selects the growth_first factor and must be True on the
    first zoom-in step and on the step right after an attack.
    """
    if attacked:
        return consts.growth_attack * bound
    if first_branch:
        return consts.growth_first * bound
    return consts.contraction * bound


@dataclass(frozen=True)
class CoderState:
    """Synchronized coder-side state: bound E, attack memory, stage, step index."""

    E: float
    last_step_attacked: bool = False
    stage: str = "zoom-in"
    k: int = 0


@dataclass(frozen=True, eq=False)
class CodingScheme:
    """Variant tag, transform, derived constants, and quantization level."""

    family: SchemeFamily
    constants: SchemeConstants
    qspec: QuantizerSpec

    @classmethod
    def build(cls, family: SchemeFamily, model: SystemModel, n_levels: int) -> "CodingScheme":
        return cls(
            family=family,
            constants=derive_constants(family, n_levels),
            qspec=QuantizerSpec(N=n_levels, n_y=model.n_y),
        )


class CoderPair:
    """Encoder and decoder running the same bound automaton in lockstep.

    The acknowledgment channel makes every attack common knowledge, so both
    sides apply the identical update each step; the pair raises if their
    states ever diverge.
    """

    def __init__(self, scheme: CodingScheme, initial_bound: float):
        self.scheme = scheme
        self.encoder = CoderState(E=initial_bound, k=0)
        self.decoder = CoderState(E=initial_bound, k=0)

    @property
    def bound(self) -> float:
        return self.encoder.E

    def region(self, center) -> QuantRegion:
        consts = self.scheme.constants
        return QuantRegion(center=center, half_width=consts.output_gain * self.encoder.E)

    def nominal_quantized(self, y, center) -> np.ndarray:
        """Value the decoder would emit this step if no attack occurs."""
        region = self.region(center)
        return decode(encode(y, region, self.scheme.qspec), region, self.scheme.qspec)

    def step(self, y, center, attacked: bool) -> np.ndarray | None:
        """Advance one time step; returns the decoded q, or None under attack."""
        if self.encoder != self.decoder:
            raise RuntimeError("coder pair lost synchronization")
        consts = self.scheme.constants
        q = None
        if not attacked:
            region = self.region(center)
            index = encode(y, region, self.scheme.qspec)
            # index crosses the channel; decoder reconstructs the cell center
            q = decode(index, region, self.scheme.qspec)
        first_branch = self.encoder.k == 0 or self.encoder.last_step_attacked
        new_bound = next_bound(self.encoder.E, attacked, first_branch, consts)
        self.encoder = replace(
            self.encoder, E=new_bound, last_step_attacked=attacked, k=self.encoder.k + 1
        )
        self.decoder = replace(
            self.decoder, E=new_bound, last_step_attacked=attacked, k=self.decoder.k + 1
        )
        return q
