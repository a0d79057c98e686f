"""Multi-vehicle pickup-and-delivery with time windows: a genetic solver
verified against an exhaustive oracle, with instance tooling and a CLI."""

from .model import (
    BLOCKED_ARC,
    COVERAGE,
    DEPOT,
    FLOW,
    LOAD,
    PRECEDENCE,
    TIME_WINDOW,
    BlockedArcError,
    FeasibilityMode,
    FeasibilityReport,
    InputError,
    Instance,
    LoadInfeasible,
    LoadProfile,
    ModelError,
    Node,
    Request,
    Route,
    RoutedSolution,
    Schedule,
    ScheduleStop,
    TimeInfeasible,
    VehicleSpec,
    Violation,
    check_feasibility,
    distance,
    fitness,
    load_profile,
    propagate_schedule,
    route_distance,
    solution_distance,
    travel_time,
)
from .ga import (
    GaParams,
    GaResult,
    GenerationStats,
    crossover_nodes,
    crossover_vehicles,
    decode,
    evaluate_generation,
    mutate_nodes,
    mutate_vehicles,
    penalized_fitness,
    random_node_chromosome,
    random_vehicle_chromosome,
    repair_capacity,
    repair_precedence,
    run_ga,
)
from .instance_io import (
    FormatError,
    GeneratorParams,
    generate_random,
    parse_li_lim,
    parse_native,
    parse_solution,
    write_native,
    write_solution,
)
from .oracle import (
    OracleLimitError,
    OracleLimits,
    OracleResult,
    count_ordered_partitions,
    cross_check,
    enumerate_optimal,
)

__version__ = "0.1.0"
