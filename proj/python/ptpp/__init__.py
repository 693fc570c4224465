"""Prescribed-time tracking control: envelopes, controllers and simulation."""

from ._ptpp import (
    ControlMode,
    ExperimentConfig,
    ErrorTransform,
    FunnelBreach,
    GaussianGrid,
    PerfFunction,
    TransformKind,
    electromechanical_preset,
    make_reference_grid,
    parse_config,
    perf_from_terminal,
    regressor_energy,
    run_experiment,
    saturated_term,
    serialize_config,
    single_link_preset,
    weak_gain_single_link,
    zeta,
)

__all__ = [
    "ControlMode",
    "ExperimentConfig",
    "ErrorTransform",
    "FunnelBreach",
    "GaussianGrid",
    "PerfFunction",
    "TransformKind",
    "electromechanical_preset",
    "make_reference_grid",
    "parse_config",
    "perf_from_terminal",
    "regressor_energy",
    "run_experiment",
    "saturated_term",
    "serialize_config",
    "single_link_preset",
    "weak_gain_single_link",
    "zeta",
]
