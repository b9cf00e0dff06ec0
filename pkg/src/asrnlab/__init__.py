"""Variance-difference bandit experiments and adaptive symmetric reward noising."""

from .agent import AgentConfig, AgentState, decay_epsilon, init_optimal, q_update, select_action
from .asrn import (
    Asrn,
    AsrnConfig,
    CalibrationBuffer,
    NoiseTable,
    Off,
    RewardNoiser,
    Uniform,
    finalize_calibration,
    lookup_bin,
    noise_reward,
    observe,
    uniform_noise,
)
from .bandit import LEFT, RIGHT, ArmSpec, BanditEnv, pull
from .errors import (
    AsrnLabError,
    CalibrationError,
    ConfigError,
    EpisodeRangeError,
    InvalidActionError,
    InvalidDiscountError,
    PhaseError,
)
from .experiments import (
    ExperimentConfig,
    SweepCell,
    SweepConfig,
    broken_bandit_config,
    run_population,
    run_single_trace,
    run_variance_sweep,
    sweep_config,
    trace_config,
)
from .telemetry import RunLog, StepRecord, detect_trap_events, grouped_mean_upsilon, smooth, success_fraction

__version__ = "0.1.0"
