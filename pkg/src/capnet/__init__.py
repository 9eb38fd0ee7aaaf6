"""Capacities of finite reversible Markov jump processes.

Exact capacities from the Dirichlet problem, Thomson and Berman-Konsowa
lower bounds from unit flows and path measures, Dirichlet upper bounds from
test potentials, truncation, equivalent electric networks and Monte Carlo
checks.
"""

__version__ = "0.1.0"

from .bounds import (
    OrderingReport,
    bk_flow_estimate,
    bk_path_estimate,
    chain_conductance,
    dirichlet_upper_bound,
    flow_energy,
    thomson_bound,
    verify_ordering,
)
from .dirichlet import (
    ChargePair,
    Potential,
    absorption_probability,
    capacity,
    dirichlet_energy,
    equilibrium_charges,
    generator,
    is_admissible,
    iterate_minimal_solution,
    minimal_solution_iterates,
    solve_harmonic,
)
from .equiv import (
    build_equivalent_network,
    emit_network,
    parallel_reduce,
    power_and_effective_resistance,
    series_reduce,
)
from .errors import (
    AbsoluteContinuityError,
    CapnetError,
    ConvergenceError,
    CyclicSupportError,
    FlowError,
    FormatError,
    InertStateError,
    PathTooLongError,
    SolverError,
    TooManyPathsError,
    UndeterminedPotentialError,
    UnsupportedCaseError,
)
from .flow import (
    FlowChain,
    FlowDiscrepancy,
    PathMeasure,
    StoppedPath,
    UnitFlow,
    dump_flow,
    dump_path_measure,
    enumerate_paths,
    flow_to_chain,
    harmonic_flow,
    induced_flow,
    load_flow,
    load_path_measure,
    path_measure_to_flow,
    radon_nikodym,
    sample_paths,
    sample_stopped_path,
    validate_unit_flow,
)
from .network import (
    CEMETERY,
    Network,
    PartitionPair,
    ValidationReport,
    Violation,
    dump_network,
    jump_kernel,
    load_network,
    transition_matrix,
    validate,
)
from .report import CapacityReport
from .sim import HittingEstimate, Trajectory, dump_trajectory, estimate_hitting_prob, simulate_jump_process
from .truncation import LevelResult, TruncationLadder, load_ladder, truncate, truncated_harmonic_flow, truncation_sweep

__all__ = [
    "__version__",
    "AbsoluteContinuityError",
    "absorption_probability",
    "bk_flow_estimate",
    "bk_path_estimate",
    "build_equivalent_network",
    "capacity",
    "CapacityReport",
    "CapnetError",
    "CEMETERY",
    "chain_conductance",
    "ChargePair",
    "ConvergenceError",
    "CyclicSupportError",
    "dirichlet_energy",
    "dirichlet_upper_bound",
    "dump_flow",
    "dump_network",
    "dump_path_measure",
    "dump_trajectory",
    "emit_network",
    "enumerate_paths",
    "equilibrium_charges",
    "estimate_hitting_prob",
    "flow_energy",
    "flow_to_chain",
    "FlowChain",
    "FlowDiscrepancy",
    "FlowError",
    "FormatError",
    "generator",
    "harmonic_flow",
    "HittingEstimate",
    "induced_flow",
    "InertStateError",
    "is_admissible",
    "iterate_minimal_solution",
    "jump_kernel",
    "LevelResult",
    "load_flow",
    "load_ladder",
    "load_network",
    "load_path_measure",
    "minimal_solution_iterates",
    "Network",
    "OrderingReport",
    "parallel_reduce",
    "PartitionPair",
    "path_measure_to_flow",
    "PathMeasure",
    "PathTooLongError",
    "Potential",
    "power_and_effective_resistance",
    "radon_nikodym",
    "sample_paths",
    "sample_stopped_path",
    "series_reduce",
    "simulate_jump_process",
    "solve_harmonic",
    "SolverError",
    "StoppedPath",
    "thomson_bound",
    "TooManyPathsError",
    "Trajectory",
    "transition_matrix",
    "truncate",
    "truncated_harmonic_flow",
    "truncation_sweep",
    "TruncationLadder",
    "UndeterminedPotentialError",
    "UnitFlow",
    "UnsupportedCaseError",
    "validate",
    "validate_unit_flow",
    "ValidationReport",
    "verify_ordering",
    "Violation",
]
