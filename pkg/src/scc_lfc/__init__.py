"""Barrier-function safety filter for load-frequency control under false-data injection."""

from .attacks import AttackSpec, DisturbanceSpec, attack_signal, resonant_frequency
from .dynamics import (
    InputVector,
    StateVector,
    SystemParams,
    build_continuous_model,
    discretize,
    local_controller_step,
    predict_measurements,
    step_continuous,
)
from .estimator import KalmanConfig, kf_step, observability_rank
from .relays import RelayBank, RelayConfig, relay_step
from .scc import SafetyLimits, SccConfig, constraint_coefficients, eval_barriers, filter_control, scc_step
from .scenario import ScenarioConfig, load_config, run, write_trace

__version__ = "0.1.0"

__all__ = [
    "AttackSpec",
    "DisturbanceSpec",
    "attack_signal",
    "resonant_frequency",
    "InputVector",
    "StateVector",
    "SystemParams",
    "build_continuous_model",
    "discretize",
    "local_controller_step",
    "predict_measurements",
    "step_continuous",
    "KalmanConfig",
    "kf_step",
    "observability_rank",
    "RelayBank",
    "RelayConfig",
    "relay_step",
    "SafetyLimits",
    "SccConfig",
    "constraint_coefficients",
    "eval_barriers",
    "filter_control",
    "scc_step",
    "ScenarioConfig",
    "load_config",
    "run",
    "write_trace",
]
