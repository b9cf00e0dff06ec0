"""Single-state tabular Q-learning with decaying epsilon-greedy exploration.

The Q-table of a one-state bandit is just a float vector with one entry per
arm. Functions here are pure: they return new tables/states instead of
mutating their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidDiscountError

EPSILON_SCHEDULES = ("multiplicative", "exponential")

# "max": bootstrap on the max over all actions of the pre-update table.
# "terminal": every pull ends its episode, so the target is the reward alone.
BOOTSTRAP_MODES = ("max", "terminal")


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 0.05
    gamma: float = 0.95
    epsilon0: float = 1.0
    epsilon_decay_rate: float = 0.001
    epsilon_schedule: str = "multiplicative"
    bootstrap: str = "max"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma < 1:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0 <= self.epsilon0 <= 1:
            raise ConfigError(f"epsilon0 must be in [0, 1], got {self.epsilon0}")
        if not (self.epsilon_decay_rate >= 0 and math.isfinite(self.epsilon_decay_rate)):
            raise ConfigError(f"epsilon_decay_rate must be >= 0, got {self.epsilon_decay_rate}")
        if self.epsilon_schedule not in EPSILON_SCHEDULES:
            raise ConfigError(f"epsilon_schedule must be one of {EPSILON_SCHEDULES}, got {self.epsilon_schedule!r}")
        if self.bootstrap not in BOOTSTRAP_MODES:
            raise ConfigError(f"bootstrap must be one of {BOOTSTRAP_MODES}, got {self.bootstrap!r}")


@dataclass(frozen=True)
class AgentState:
    qtable: np.ndarray
    epsilon: float
    episode: int = 0


def init_optimal(arm_means: Sequence[float], gamma: float) -> np.ndarray:
    """Discounted value of pulling each arm forever: ``mean / (1 - gamma)``."""
    if not gamma < 1:
        raise InvalidDiscountError(f"gamma must be < 1 for the discounted sum to converge, got {gamma}")
    if gamma < 0:
        raise InvalidDiscountError(f"gamma must be >= 0, got {gamma}")
    means = np.asarray(arm_means, dtype=np.float64)
    if not np.all(np.isfinite(means)):
        raise ValueError("arm means must be finite")
    return means / (1.0 - gamma)


def greedy_choice(qtable: np.ndarray, u: float) -> int:
    """Argmax of ``qtable``; ties broken by the uniform ``u`` in [0, 1)."""
    q = np.asarray(qtable)
    maxima = np.flatnonzero(q == q.max())
    return int(maxima[min(int(u * len(maxima)), len(maxima) - 1)])


def choose(qtable: np.ndarray, epsilon: float, u_explore: float, u_choice: float) -> int:
    """Epsilon-greedy decision from two pre-drawn uniforms."""
    k = len(qtable)
    if u_explore < epsilon:
        return min(int(u_choice * k), k - 1)
    return greedy_choice(qtable, u_choice)


def select_action(state: AgentState, rng: np.random.Generator) -> int:
    """Epsilon-greedy action. Always consumes two uniforms from ``rng``:
    the explore coin, then the arm/tie-break draw."""
    u_explore = rng.random()
    u_choice = rng.random()
    return choose(state.qtable, state.epsilon, u_explore, u_choice)


def td_target(qtable: np.ndarray, action: int, reward: float, gamma: float, bootstrap: str = "max") -> float:
    if bootstrap == "terminal":
        return float(reward)
    return float(reward + gamma * np.max(qtable))


def q_update(
    qtable: np.ndarray, action: int, reward: float, alpha: float, gamma: float, bootstrap: str = "max"
) -> tuple[np.ndarray, float]:
    """One Q-learning step on ``action``.

    Returns the new table and the update magnitude
    ``|alpha * (target - Q[action])|`` where the target bootstraps on the max
    over all actions of the table *before* the update.
    """
    q = np.array(qtable, dtype=np.float64)
    old = q[action]
    delta = alpha * (td_target(q, action, reward, gamma, bootstrap) - old)
    q[action] = old + delta
    return q, abs(float(delta))


def epsilon_at(config: AgentConfig, episode: int) -> float:
    """Closed-form epsilon for the exponential schedule."""
    return config.epsilon0 * math.exp(-config.epsilon_decay_rate * episode)


def next_epsilon(epsilon: float, config: AgentConfig, episode: int) -> float:
    """Epsilon for ``episode + 1`` given the value used at ``episode``."""
    if config.epsilon_schedule == "exponential":
        return epsilon_at(config, episode + 1)
    return max(epsilon * (1.0 - config.epsilon_decay_rate), 0.0)


def decay_epsilon(state: AgentState, config: AgentConfig) -> AgentState:
    """Advance one episode, shrinking epsilon per the configured schedule."""
    eps = min(next_epsilon(state.epsilon, config, state.episode), state.epsilon)
    return replace(state, epsilon=eps, episode=state.episode + 1)


def initial_state(arm_means: Sequence[float], config: AgentConfig) -> AgentState:
    return AgentState(qtable=init_optimal(arm_means, config.gamma), epsilon=config.epsilon0, episode=0)
