"""Per-step logs, smoothing and the aggregates behind the bandit figures."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .bandit import LEFT, RIGHT
from .errors import EpisodeRangeError

STEP_COLUMNS = ("agent_id", "episode", "action", "raw_reward", "noised_reward", "upsilon", "epsilon", "q_left", "q_right")


@dataclass(frozen=True)
class StepRecord:
    episode: int
    agent_id: int
    action: int
    raw_reward: float
    noised_reward: float
    upsilon: float
    epsilon: float
    q_values: tuple[float, ...]


@dataclass
class RunLog:
    """Columnar log of a population run.

    Arrays are indexed ``[agent_row, episode]``; ``q_values`` holds the
    post-update table and has a trailing arm axis. ``agent_ids[row]`` maps a
    row back to the agent that produced it.
    """

    agent_ids: np.ndarray
    actions: np.ndarray
    raw_rewards: np.ndarray
    noised_rewards: np.ndarray
    upsilons: np.ndarray
    epsilons: np.ndarray
    q_values: np.ndarray

    @property
    def num_agents(self) -> int:
        return len(self.agent_ids)

    @property
    def num_episodes(self) -> int:
        return self.actions.shape[1]

    def row(self, agent_id: int) -> int:
        hits = np.flatnonzero(self.agent_ids == agent_id)
        if len(hits) == 0:
            raise KeyError(f"agent {agent_id} not in log")
        return int(hits[0])

    def records(self, agent_id: int) -> Iterator[StepRecord]:
        i = self.row(agent_id)
        for t in range(self.num_episodes):
            yield StepRecord(
                episode=t,
                agent_id=int(agent_id),
                action=int(self.actions[i, t]),
                raw_reward=float(self.raw_rewards[i, t]),
                noised_reward=float(self.noised_rewards[i, t]),
                upsilon=float(self.upsilons[i, t]),
                epsilon=float(self.epsilons[i, t]),
                q_values=tuple(float(v) for v in self.q_values[i, t]),
            )

    def select(self, agent_ids: Sequence[int]) -> "RunLog":
        rows = [self.row(a) for a in agent_ids]
        return RunLog(*(getattr(self, f)[rows] for f in _FIELDS))

    @classmethod
    def concat(cls, logs: Sequence["RunLog"]) -> "RunLog":
        return cls(*(np.concatenate([getattr(log, f) for log in logs]) for f in _FIELDS))

    def check_episode(self, episode: int) -> None:
        if self.num_agents == 0:
            raise EpisodeRangeError("empty log")
        if not 0 <= episode < self.num_episodes:
            raise EpisodeRangeError(f"episode {episode} outside [0, {self.num_episodes})")


_FIELDS = ("agent_ids", "actions", "raw_rewards", "noised_rewards", "upsilons", "epsilons", "q_values")


def smooth(series: Sequence[float], kernel_len: int) -> np.ndarray:
    """Trailing moving average; the first ``kernel_len - 1`` points average
    over however many samples exist so far."""
    if int(kernel_len) != kernel_len or kernel_len < 1:
        raise ValueError(f"kernel_len must be a positive integer, got {kernel_len}")
    x = np.asarray(series, dtype=np.float64)
    out = np.empty_like(x)
    if len(x) == 0:
        return out
    head = min(kernel_len - 1, len(x))
    out[:head] = np.cumsum(x[:head]) / np.arange(1, head + 1)
    if len(x) >= kernel_len:
        out[kernel_len - 1 :] = np.lib.stride_tricks.sliding_window_view(x, kernel_len).mean(axis=1)
    # keep window means inside the window's range despite rounding
    return np.clip(out, x.min(), x.max())


def _right_share(q: np.ndarray) -> np.ndarray:
    """Per-agent weight of the right arm in the greedy policy: 1 if it is the
    unique argmax, ``1/m`` if it ties with ``m - 1`` others, else 0."""
    is_max = q == q.max(axis=-1, keepdims=True)
    return np.where(is_max[..., RIGHT], 1.0 / is_max.sum(axis=-1), 0.0)


def success_fraction(logs: RunLog, episode: int) -> float:
    """Fraction of agents whose greedy arm at ``episode`` is the right arm."""
    logs.check_episode(episode)
    return float(_right_share(logs.q_values[:, episode]).mean())


def success_series(logs: RunLog) -> np.ndarray:
    if logs.num_agents == 0:
        raise EpisodeRangeError("empty log")
    return _right_share(logs.q_values).mean(axis=0)


def action_frequency_series(logs: RunLog, arm: int = RIGHT) -> np.ndarray:
    """Fraction of agents that actually pulled ``arm`` at each episode."""
    if logs.num_agents == 0:
        raise EpisodeRangeError("empty log")
    return (logs.actions == arm).mean(axis=0)


def _group_means(upsilons: np.ndarray, mask: np.ndarray, axis=None):
    n = mask.sum(axis=axis)
    total = np.where(mask, upsilons, 0.0).sum(axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, total / np.maximum(n, 1), np.nan)


def grouped_mean_upsilon(logs: RunLog, episode: int) -> tuple[float, float]:
    """Mean update magnitude of agents that pulled right / left at ``episode``.

    An empty group yields ``nan``.
    """
    logs.check_episode(episode)
    ups = logs.upsilons[:, episode]
    acts = logs.actions[:, episode]
    return float(_group_means(ups, acts == RIGHT)), float(_group_means(ups, acts == LEFT))


def grouped_mean_upsilon_series(logs: RunLog) -> tuple[np.ndarray, np.ndarray]:
    return (
        _group_means(logs.upsilons, logs.actions == RIGHT, axis=0),
        _group_means(logs.upsilons, logs.actions == LEFT, axis=0),
    )


def window_mean_upsilon(logs: RunLog, start: int, stop: int | None = None) -> tuple[float, float]:
    """Mean update magnitude of all right- and left-pulling steps in
    episodes ``[start, stop)``, pooled over agents."""
    ups = logs.upsilons[:, start:stop]
    acts = logs.actions[:, start:stop]
    return float(_group_means(ups, acts == RIGHT)), float(_group_means(ups, acts == LEFT))


def detect_trap_events(q_values: np.ndarray, start: str = "right") -> list[tuple[int, str]]:
    """Greedy-policy switches of one agent.

    ``q_values`` is the agent's ``(episodes, arms)`` post-update trajectory.
    An ``enter`` is emitted where the left arm strictly overtakes the right
    one, an ``exit`` where the right arm strictly overtakes the left. Exact
    ties keep the previous side. ``start`` is the side before episode 0.
    """
    q = np.asarray(q_values, dtype=np.float64)
    side = np.zeros(len(q), dtype=np.int8)  # +1 right ahead, -1 left ahead, 0 tie
    side[q[:, RIGHT] > q[:, LEFT]] = 1
    side[q[:, LEFT] > q[:, RIGHT]] = -1
    current = 1 if start == "right" else -1
    events = []
    for t in np.flatnonzero(side != 0):
        s = side[t]
        if s != current:
            events.append((int(t), "enter" if s == -1 else "exit"))
            current = s
    return events


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else repr(float(v))
    return str(int(v))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` so the file is either complete or absent."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def steps_csv(logs: RunLog) -> str:
    """One row per step, agents in log order then episodes ascending."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEP_COLUMNS)
    n, t = logs.actions.shape
    episodes = np.arange(t)
    for i in range(n):
        cols = [
            [int(logs.agent_ids[i])] * t,
            episodes.tolist(),
            logs.actions[i].tolist(),
            logs.raw_rewards[i].tolist(),
            logs.noised_rewards[i].tolist(),
            logs.upsilons[i].tolist(),
            logs.epsilons[i].tolist(),
            logs.q_values[i, :, LEFT].tolist(),
            logs.q_values[i, :, RIGHT].tolist(),
        ]
        w.writerows(zip(*cols))
    return buf.getvalue()


def table_csv(header: Sequence[str], columns: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def success_csv(logs: RunLog) -> str:
    s = success_series(logs)
    return table_csv(("episode", "success_fraction"), (np.arange(len(s)), s))


def upsilon_csv(logs: RunLog) -> str:
    right, left = grouped_mean_upsilon_series(logs)
    return table_csv(("episode", "mean_upsilon_right", "mean_upsilon_left"), (np.arange(len(right)), right, left))
