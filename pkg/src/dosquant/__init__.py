"""Quantized output-feedback stabilization under DoS attacks.

Simulation and analysis toolkit for discrete LTI plants whose output crosses
a channel an attacker can jam: zooming-in/zooming-out coding schemes,
DoS budget models, closed-form stability conditions, and the unstable
batch-reactor benchmark.
"""

from .analysis import Frontier, MinNResult, StabilityVerdict, asymptote, min_N, sweep_frontier, verdict
from .attack import (
    DoSBudget,
    DoSTrace,
    GreedyAttackParams,
    GreedyAttacker,
    clear_trace,
    periodic_trace,
    random_trace,
    validate,
)
from .coder import (
    CoderPair,
    CoderState,
    CodingScheme,
    SchemeConstants,
    SchemeFamily,
    derive_constants,
    estimate_family,
    next_bound,
    origin_family,
)
from .model import ObserverGains, SystemModel, closed_loop_blocks
from .numerics import (
    EigDecomp,
    NearDefectiveError,
    dare_solve,
    eig_decomp,
    expm,
    inf_norm,
    kalman_predictor_gain,
    lqr_gain,
    numerical_rank,
    pinv_left,
    spectral_radius,
    zoh_discretize,
)
from .plantloop import InvariantViolationError, SimTrace, controller_step, plant_step, run_closed_loop
from .quantizer import QuantRegion, QuantizerOverflowError, QuantizerSpec, decode, encode
from .transform import NormBoundCert, Transform, TransformError, fit_norm_bounds, scaled_jordan_transform
from .zoomout import (
    CheckerReport,
    PeriodicEigReport,
    ZoomOutCoder,
    ZoomOutParams,
    check_prop45,
    check_thm44,
    observability_index,
    periodic_eig_analysis,
    vandermonde_invertibility_oracle,
)

__version__ = "0.1.0"
