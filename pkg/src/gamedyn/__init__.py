"""Learning dynamics on finite potential games.

Exact perturbed Markov chains for log-linear and Metropolis learning,
hitting-time statistics and bounds, and the full hierarchical cycle
decomposition used to compare the two dynamics.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    GamedynError,
    NumericError,
    RejectedGameError,
)
from .games import (
    GameDefinition,
    Profile,
    best_response_set,
    enumerate_nash,
    hamming,
    is_nash,
    neighborhood,
    table_game,
    verify_potential,
)
from .coverage import (
    CoverageGame,
    SensorConfig,
    build_coverage_game,
    covered,
    global_payoff,
    marginal_utility,
    r_max_points,
    sensor_cost,
    total_coverage,
)
from .fixtures import (
    BUILTINS,
    as_game,
    g2,
    g3,
    load_fixture,
    random_potential_game,
    three_sensor,
)
from .dynamics import (
    KERNELS,
    LLL,
    ML,
    RegularityReport,
    Trace,
    TransitionModel,
    build_transition_model,
    compute_gamma,
    first_nash_time,
    lll_step_distribution,
    mix_seed,
    ml_accept_probability,
    simulate,
    simulate_path,
    verify_regularity,
)
from .analysis import (
    HittingBound,
    HittingReport,
    MplrVerdict,
    StationaryDistribution,
    ZeroCostGraph,
    exact_hitting_times,
    gibbs,
    hitting_bound,
    hitting_report,
    mplr_condition,
    stationary_solve,
    tv_distance,
    zero_cost_stats,
)
from .cycles import (
    AltitudeTable,
    CycleHierarchy,
    CycleNode,
    altitude_table,
    communication_altitude,
    compare_hierarchies,
    cycle_altitude,
    decompose,
    decompose_model,
    empirical_exit_validation,
    model_altitudes,
    verify_structure,
)
from .reporting import export_dot, write_csv, write_json

__all__ = [name for name in dir() if not name.startswith("_")]
