"""Gossip-based distributed CDF estimation.

Spectra estimates the cumulative distribution of node inputs with
flow-based averaging that tolerates message loss and churn; Adam2 is a
push-pull averaging baseline kept deliberately non-atomic.  The
simulator runs either one in deterministic lockstep rounds with fault
injection, and the metrics module scores estimates with
Kolmogorov-Smirnov statistics against the live empirical CDF.
"""

__version__ = "0.1.0"

from .adam2 import (
    Adam2NodeState,
    PushPullMessage,
    adam2_estimate,
    adam2_handle,
    adam2_init,
    adam2_push_round,
)
from .config import (
    ChurnSchedule,
    ConfigError,
    Disturbance,
    PRESETS,
    ScenarioConfig,
    config_text,
    parse_config,
    preset_config,
    preset_names,
    validate_config,
)
from .core import (
    FlowTable,
    FlowVector,
    InterpolationInterval,
    SpectraMessage,
    SpectraNodeState,
    compute_base_vector,
    estimate,
    generate_messages,
    handle_neighbor_added,
    handle_neighbor_removed,
    interpolate_point,
    interval_points,
    merge_intervals,
    set_input_value,
    spectra_init,
    state_transition,
    transform_vector,
)
from .metrics import (
    EmpiricalCdf,
    RoundTrace,
    emit_csv,
    format_metric,
    ks_max,
    ks_mean,
    ks_node,
)
from .network import (
    Graph,
    add_node,
    connected_components,
    diameter,
    edge_list_text,
    generate_random_graph,
    is_connected,
    remove_node,
)
from .simulator import (
    World,
    aggregate_traces,
    build_world,
    run_round,
    run_scenario,
    run_trial,
    seed_world,
    sync_world,
    trial_seed,
)

__all__ = [
    "__version__",
    "Adam2NodeState", "PushPullMessage", "adam2_estimate", "adam2_handle",
    "adam2_init", "adam2_push_round",
    "ChurnSchedule", "ConfigError", "Disturbance", "PRESETS",
    "ScenarioConfig", "config_text", "parse_config", "preset_config",
    "preset_names", "validate_config",
    "FlowTable", "FlowVector", "InterpolationInterval", "SpectraMessage",
    "SpectraNodeState", "compute_base_vector", "estimate",
    "generate_messages", "handle_neighbor_added", "handle_neighbor_removed",
    "interpolate_point", "interval_points", "merge_intervals",
    "set_input_value", "spectra_init", "state_transition", "transform_vector",
    "EmpiricalCdf", "RoundTrace", "emit_csv", "format_metric", "ks_max",
    "ks_mean", "ks_node",
    "Graph", "add_node", "connected_components", "diameter",
    "edge_list_text", "generate_random_graph", "is_connected", "remove_node",
    "World", "aggregate_traces", "build_world", "run_round", "run_scenario",
    "run_trial", "seed_world", "sync_world", "trial_seed",
]
