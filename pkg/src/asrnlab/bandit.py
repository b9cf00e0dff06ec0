"""Gaussian multi-armed bandit with per-arm variance differences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidActionError

LEFT = 0
RIGHT = 1


@dataclass(frozen=True)
class ArmSpec:
    """Reward distribution of one arm: Normal(mean, std**2)."""

    mean: float
    std: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ConfigError(f"arm parameters must be finite, got mean={self.mean}, std={self.std}")
        if self.std < 0:
            raise ConfigError(f"arm std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class BanditEnv:
    """Stateless k-armed bandit. Index 0 is the left arm, index 1 the right arm.

    The environment never owns random state; callers pass their own stream to
    :func:`pull`.
    """

    arms: tuple[ArmSpec, ...]

    def __init__(self, arms: Sequence[ArmSpec]):
        arms = tuple(a if isinstance(a, ArmSpec) else ArmSpec(*a) for a in arms)
        if len(arms) < 2:
            raise ConfigError(f"a bandit needs at least 2 arms, got {len(arms)}")
        object.__setattr__(self, "arms", arms)

    @classmethod
    def two_armed(cls, mu_left: float, sigma_left: float, mu_right: float, sigma_right: float) -> "BanditEnv":
        return cls([ArmSpec(mu_left, sigma_left), ArmSpec(mu_right, sigma_right)])

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        return np.array([a.mean for a in self.arms], dtype=np.float64)

    @property
    def stds(self) -> np.ndarray:
        return np.array([a.std for a in self.arms], dtype=np.float64)


def pull(env: BanditEnv, arm: int, rng: np.random.Generator) -> float:
    """Sample a reward from ``arm``.

    Consumes exactly one standard normal from ``rng`` per call, including for
    zero-variance arms, so replaying a stream replays the rewards. The reward
    is ``mean + std * z``; with ``std == 0`` this is ``mean`` exactly.
    """
    if not (0 <= arm < env.num_arms) or int(arm) != arm:
        raise InvalidActionError(f"arm must be in [0, {env.num_arms - 1}], got {arm}")
    z = rng.standard_normal()
    spec = env.arms[int(arm)]
    return float(spec.mean + spec.std * z)
