"""Energy-efficient transmit covariance design and RAU selection for MIMO distributed antenna systems."""

from .channel import (
    ChannelRealization,
    DasTopology,
    assemble,
    cas_topology,
    draw_channel,
    draw_user_position,
    path_loss_db,
    place_raus,
)
from .numerics import hermitian_evd, is_psd, log_det_rate
from .selection import (
    SelectionResult,
    SetEvaluator,
    Strategy,
    all_on_baselines,
    cas_baseline,
    select_distance,
    select_exhaustive,
    select_norm_based,
)
from .solver import (
    CovarianceSolution,
    PowerModel,
    SolverConfig,
    Status,
    StepRule,
    inner_waterfill,
    miso_mrt_covariance,
    solve_ee_fixed_set,
    solve_p1,
    solve_p2,
    solve_p3,
)

__version__ = "0.1.0"
