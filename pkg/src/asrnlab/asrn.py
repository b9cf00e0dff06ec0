"""Adaptive symmetric reward noising.

During a calibration window the learner's update magnitudes ``upsilon`` are
collected together with the raw rewards that produced them. The updates are
partitioned into bins, the reward spread ``S_b`` of each bin is measured, and
every bin is assigned a zero-mean Gaussian noise scale
``N_b = sqrt(S_max**2 - S_b**2)`` so that after noising all bins carry the
same reward variance ``S_max**2``. After calibration each reward is routed to
its bin by the update it would cause and perturbed with ``N(r, N_b**2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from .errors import CalibrationError, ConfigError, PhaseError

BINNINGS = ("quantile", "width")


@dataclass(frozen=True)
class AsrnConfig:
    """``binning='quantile'`` gives equal-count bins over the calibration
    updates; ``'width'`` gives equal-width bins over their range."""

    num_bins: int = 10
    calibration_steps: int = 1000
    binning: str = "quantile"
    pooled: bool = False

    def __post_init__(self):
        if int(self.num_bins) != self.num_bins or self.num_bins < 1:
            raise ConfigError(f"num_bins must be a positive integer, got {self.num_bins}")
        if int(self.calibration_steps) != self.calibration_steps or self.calibration_steps < 2 * self.num_bins:
            raise ConfigError(
                f"calibration_steps must be an integer >= 2 * num_bins = {2 * self.num_bins}, "
                f"got {self.calibration_steps}"
            )
        if self.binning not in BINNINGS:
            raise ConfigError(f"binning must be one of {BINNINGS}, got {self.binning!r}")


@dataclass(frozen=True)
class Off:
    name = "off"


@dataclass(frozen=True)
class Asrn:
    config: AsrnConfig = field(default_factory=AsrnConfig)
    name = "asrn"


@dataclass(frozen=True)
class Uniform:
    sigma: float = 0.1
    name = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError(f"uniform sigma must be finite and >= 0, got {self.sigma}")


NoiserMode = Union[Off, Asrn, Uniform]


@dataclass
class CalibrationBuffer:
    """Append-only store of ``(upsilon, reward)`` pairs, capped at ``capacity``."""

    capacity: int
    upsilons: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    finalized: bool = False

    def __len__(self):
        return len(self.upsilons)

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity


def observe(buffer: CalibrationBuffer, upsilon: float, reward: float) -> CalibrationBuffer:
    if buffer.finalized:
        raise PhaseError("calibration already finalized")
    if buffer.full:
        raise PhaseError(f"calibration buffer is full ({buffer.capacity} samples)")
    if not (upsilon >= 0 and math.isfinite(upsilon)) or not math.isfinite(reward):
        raise ValueError(f"bad calibration sample upsilon={upsilon}, reward={reward}")
    buffer.upsilons.append(float(upsilon))
    buffer.rewards.append(float(reward))
    return buffer


@dataclass(frozen=True)
class NoiseTable:
    edges: tuple[float, ...]
    bin_std: tuple[float, ...]
    bin_noise: tuple[float, ...]
    s_max: float
    bin_count: tuple[int, ...] = ()
    config: AsrnConfig = field(default_factory=AsrnConfig)

    @property
    def num_bins(self) -> int:
        return len(self.bin_std)

    @classmethod
    def from_bin_stds(cls, bin_std, edges=None, bin_count=(), config=None) -> "NoiseTable":
        """Build a table from per-bin reward spreads."""
        s = np.asarray(bin_std, dtype=np.float64)
        if s.ndim != 1 or len(s) == 0 or np.any(s < 0) or not np.all(np.isfinite(s)):
            raise CalibrationError(f"bin_std must be a non-empty vector of finite values >= 0, got {bin_std}")
        s_max = float(s.max())
        noise = np.sqrt(np.maximum(s_max**2 - s**2, 0.0))
        if edges is None:
            edges = np.arange(1, len(s), dtype=np.float64)
        edges = tuple(float(e) for e in edges)
        if len(edges) != len(s) - 1:
            raise CalibrationError(f"{len(s)} bins need {len(s) - 1} edges, got {len(edges)}")
        return cls(
            edges=edges,
            bin_std=tuple(float(v) for v in s),
            bin_noise=tuple(float(v) for v in noise),
            s_max=s_max,
            bin_count=tuple(int(c) for c in bin_count),
            config=config if config is not None else AsrnConfig(num_bins=len(s), calibration_steps=max(1000, 2 * len(s))),
        )

    def to_dict(self) -> dict:
        return {
            "edges": list(self.edges),
            "bin_std": list(self.bin_std),
            "bin_noise": list(self.bin_noise),
            "s_max": self.s_max,
            "bin_count": list(self.bin_count),
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseTable":
        return cls(
            edges=tuple(float(v) for v in data["edges"]),
            bin_std=tuple(float(v) for v in data["bin_std"]),
            bin_noise=tuple(float(v) for v in data["bin_noise"]),
            s_max=float(data["s_max"]),
            bin_count=tuple(int(v) for v in data.get("bin_count", ())),
            config=AsrnConfig(**data["config"]),
        )

    def dumps(self) -> str:
        # json writes shortest round-trip float reprs, so loads() is bit-exact
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "NoiseTable":
        return cls.from_dict(json.loads(text))


def _quantile_edges(sorted_ups: np.ndarray, num_bins: int) -> np.ndarray:
    n = len(sorted_ups)
    sizes = np.full(num_bins, n // num_bins)
    sizes[: n % num_bins] += 1
    starts = np.cumsum(sizes)[:-1]
    return (sorted_ups[starts - 1] + sorted_ups[starts]) / 2.0


def finalize_calibration(buffer: CalibrationBuffer, config: AsrnConfig) -> NoiseTable:
    """Turn the collected calibration pairs into an immutable :class:`NoiseTable`.

    Samples are routed to bins with :func:`lookup_bin` against the computed
    edges, so a stored sample always looks up to the bin whose spread it
    contributed to. Bins holding fewer than two rewards get ``S_b = 0``.
    """
    ups = np.asarray(buffer.upsilons, dtype=np.float64)
    rew = np.asarray(buffer.rewards, dtype=np.float64)
    if len(ups) < 2 * config.num_bins:
        raise CalibrationError(f"need at least {2 * config.num_bins} calibration samples, got {len(ups)}")
    buffer.finalized = True

    if ups.min() == ups.max():
        return NoiseTable.from_bin_stds([rew.std()], edges=(), bin_count=(len(rew),), config=config)

    if config.binning == "quantile":
        edges = _quantile_edges(np.sort(ups, kind="stable"), config.num_bins)
    else:
        edges = np.linspace(ups.min(), ups.max(), config.num_bins + 1)[1:-1]

    bins = np.searchsorted(edges, ups, side="right")
    counts = np.bincount(bins, minlength=config.num_bins)
    stds = np.array([rew[bins == b].std() if counts[b] >= 2 else 0.0 for b in range(config.num_bins)])
    return NoiseTable.from_bin_stds(stds, edges=edges, bin_count=counts, config=config)


def lookup_bin(table: NoiseTable, upsilon: float) -> int:
    """Bin whose interval holds ``upsilon``; values beyond the edges clamp."""
    return int(np.searchsorted(table.edges, upsilon, side="right"))


def noise_reward(table: NoiseTable, reward: float, upsilon: float, rng: np.random.Generator) -> float:
    """Draw from ``N(reward, N_b**2)``. Consumes one standard normal."""
    z = rng.standard_normal()
    return float(reward + table.bin_noise[lookup_bin(table, upsilon)] * z)


def uniform_noise(reward: float, sigma: float, rng: np.random.Generator) -> float:
    """Draw from ``N(reward, sigma**2)`` regardless of the update size."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    z = rng.standard_normal()
    return float(reward + sigma * z)


class RewardNoiser:
    """Stateful single-agent noiser covering all three modes.

    In ASRN mode the first ``calibration_steps`` rewards pass through
    untouched while being collected; the table is built right after the last
    one. Every call consumes exactly one normal from ``rng`` whatever the mode
    or phase, which keeps trajectories comparable across modes.
    """

    def __init__(self, mode: NoiserMode):
        self.mode = mode
        self.table: NoiseTable | None = None
        self.buffer = CalibrationBuffer(mode.config.calibration_steps) if isinstance(mode, Asrn) else None

    @property
    def calibrating(self) -> bool:
        return self.buffer is not None and self.table is None

    def __call__(self, reward: float, upsilon: float, rng: np.random.Generator) -> float:
        if isinstance(self.mode, Uniform):
            return uniform_noise(reward, self.mode.sigma, rng)
        if isinstance(self.mode, Off):
            rng.standard_normal()
            return reward
        if self.table is not None:
            return noise_reward(self.table, reward, upsilon, rng)
        rng.standard_normal()
        observe(self.buffer, upsilon, reward)
        if self.buffer.full:
            self.table = finalize_calibration(self.buffer, self.mode.config)
        return reward
