"""SIR adversarial spreading coupled with MSR resilient consensus."""

from ._kernels import backend
from .consensus import (
    ConstantAdversary,
    PruningError,
    Verdict,
    check_resilient,
    msr_kept,
    msr_update,
    step_network,
)
from .epidemic import (
    AdaptiveGlobal,
    DynamicLocal,
    FixedReduction,
    HeterogeneityError,
    NoEpidemicError,
    NoReduction,
    SirParams,
    SirState,
    TimeLimited,
    dynamic_peak_bound,
    f_w,
    peak_bound_static,
    simulate_sir,
    sir_step,
    solve_b_star,
)
from .harness import SweepGrid, TrialConfig, TrialResult, run_policy_comparison, run_sweep, run_trial
from .network import Graph, Partition, generate_rgg, min_degree, partition_nodes
from .policy import PolicyConfig, dynamic_assign, feasibility_report, static_setup_complete, static_setup_noncomplete
from .population import InfectionMode, Status, StatusLedger, advance_statuses, integer_cardinalities, regular_set

__version__ = "0.1.0"
