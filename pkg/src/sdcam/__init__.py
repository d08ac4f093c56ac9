"""Successive difference-of-convex approximation over Moreau envelopes.

Minimizes composite objectives f(x) + P_0(x) + sum_i P_i(A_i x) where the
P_i are prox-friendly but possibly nonconvex (indicators of sparsity or
rank sets, fractional-power penalties).  Each P_i is replaced by its
Moreau envelope, which splits into a quadratic minus a convex function;
the resulting surrogates are solved by a nonmonotone proximal gradient
method while the smoothing level is driven to zero.
"""

from .linalg import (
    EigFactors,
    SvdFactors,
    hard_threshold_magnitude,
    hard_threshold_value,
    svd,
    sym_eig,
)
from .model import (
    CompositeProblem,
    FirstDifferenceOp,
    IdentityOp,
    LinearOp,
    SamplingMaskOp,
    SmoothFn,
    SurrogateProblem,
    VectorizeOp,
    estimate_norm_sq,
    eval_F,
    eval_F_lambda,
    stationarity_residual,
    surrogate,
)
from .moreau import MoreauTerm, concave_subgrad, dc_split, moreau_value
from .npg import NpgBacktrackError, NpgParams, NpgResult, bb_init, npg_run, npg_step
from .problems import (
    FusedConfig,
    SlrConfig,
    build_correlation,
    build_fused,
    build_matrix_completion,
    build_portfolio,
    build_slr,
)
from .prox import (
    AffineTwoSet,
    EntrySparseSet,
    FixedEntriesSet,
    HalfPower,
    IndicatorSet,
    KSparseBoxSet,
    L1Box,
    L1Norm,
    ProxFriendly,
    SpectralRankSet,
    Zero,
    proj_affine2,
    proj_entry_sparse,
    proj_fixed_entries,
    proj_ksparse_box,
    proj_spectral,
    prox_half,
    prox_l1,
    prox_l1_box,
)
from .solver import (
    OuterRecord,
    SdcamDivergenceError,
    SdcamParams,
    SdcamReport,
    sdcam_run,
    smoothed_tv,
    snpg_run,
)

__version__ = "0.1.0"
