"""Deterministic multi-agent pathfinding gridworld and benchmark stack."""

from .core import (
    Action,
    CollisionTally,
    EnvState,
    EpisodeStats,
    GridConfig,
    StepOutcome,
    create_env,
    episode_indicators,
    resolve_moves,
    step,
)
from .mapgen import MapGrid, WarehouseParams, gen_maze, gen_random, gen_warehouse
from .maps_io import (
    AlgorithmSpec,
    EvalConfig,
    InstanceSpec,
    benchmark_suite_config,
    expand_config,
    ingest_movingai,
    parse_ascii,
    parse_eval_config,
    register_benchmark_maps,
    register_map,
    resolve_map,
    sample_instance,
    slice_tiles,
    to_ascii,
)
from .obs import GlobalState, Observation, export_global_state, extract_observation, observe_all
from .solvers import (
    AStarPolicy,
    GreedyReplanPolicy,
    Policy,
    PrioritizedWindowedPlanner,
    RandomPolicy,
    ReservationTable,
    a_star,
    bfs_distances,
    make_policy,
)

__version__ = "0.1.0"
