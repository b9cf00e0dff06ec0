"""End-to-end bandit experiments.

All agents of a population advance in lockstep as rows of numpy arrays. Each
agent's randomness comes from its own streams (see :mod:`asrnlab.rng`) and
every operation is elementwise across rows, so an agent's trajectory does not
depend on which other agents share the batch, on chunking, or on the number
of worker processes.

Per episode an agent: draws the explore coin and arm/tie-break uniform,
pulls, computes the would-be update from the raw reward, noises the reward
(one normal drawn in every mode), applies the Q-update with the noised
reward, logs, and decays epsilon.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import rng as streams
from .agent import AgentConfig, init_optimal, next_epsilon
from .asrn import Asrn, AsrnConfig, CalibrationBuffer, NoiserMode, NoiseTable, Off, Uniform, finalize_calibration
from .bandit import ArmSpec, BanditEnv
from .errors import ConfigError
from .telemetry import RunLog, detect_trap_events, success_series

SWEEP_SCOPE = 1


def default_sigma_left() -> tuple[float, ...]:
    return tuple(0.25 * i for i in range(21))


def default_sigma_right() -> tuple[float, ...]:
    return tuple(0.5 * i for i in range(1, 21))


@dataclass(frozen=True)
class SweepConfig:
    sigma_left_values: tuple[float, ...] = field(default_factory=default_sigma_left)
    sigma_right_values: tuple[float, ...] = field(default_factory=default_sigma_right)

    def __post_init__(self):
        object.__setattr__(self, "sigma_left_values", tuple(float(v) for v in self.sigma_left_values))
        object.__setattr__(self, "sigma_right_values", tuple(float(v) for v in self.sigma_right_values))
        if not self.sigma_left_values or not self.sigma_right_values:
            raise ConfigError("sweep sigma grids must be non-empty")
        for v in self.sigma_left_values + self.sigma_right_values:
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"sweep sigmas must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ExperimentConfig:
    arms: tuple[ArmSpec, ...] = (ArmSpec(0.0, 0.0), ArmSpec(1.0, 2.5))
    num_agents: int = 100
    num_episodes: int = 10_000
    agent: AgentConfig = field(default_factory=AgentConfig)
    noiser: NoiserMode = field(default_factory=Off)
    master_seed: int = 0
    sweep: SweepConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "arms", BanditEnv(self.arms).arms)
        for name in ("num_agents", "num_episodes"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if isinstance(self.noiser, Asrn) and self.noiser.config.calibration_steps > self.num_episodes:
            raise ConfigError(
                f"calibration_steps ({self.noiser.config.calibration_steps}) exceeds num_episodes ({self.num_episodes})"
            )

    @property
    def env(self) -> BanditEnv:
        return BanditEnv(self.arms)

    def to_dict(self) -> dict:
        d = {
            "arms": [asdict(a) for a in self.arms],
            "num_agents": self.num_agents,
            "num_episodes": self.num_episodes,
            "agent": asdict(self.agent),
            "noiser": noiser_to_dict(self.noiser),
            "master_seed": self.master_seed,
        }
        if self.sweep is not None:
            d["sweep"] = {k: list(v) for k, v in asdict(self.sweep).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {"arms", "num_agents", "num_episodes", "agent", "noiser", "master_seed", "sweep"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            kw = {}
            if "arms" in d:
                kw["arms"] = tuple(ArmSpec(float(a["mean"]), float(a["std"])) for a in d["arms"])
            for k in ("num_agents", "num_episodes", "master_seed"):
                if k in d:
                    kw[k] = d[k]
            if "agent" in d:
                kw["agent"] = AgentConfig(**d["agent"])
            if "noiser" in d:
                kw["noiser"] = noiser_from_dict(d["noiser"])
            if d.get("sweep") is not None:
                kw["sweep"] = SweepConfig(**d["sweep"])
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls(**kw)


def noiser_to_dict(mode: NoiserMode) -> dict:
    if isinstance(mode, Asrn):
        return {"mode": "asrn", **asdict(mode.config)}
    if isinstance(mode, Uniform):
        return {"mode": "uniform", "sigma": mode.sigma}
    return {"mode": "off"}


def noiser_from_dict(d: dict) -> NoiserMode:
    d = dict(d)
    mode = d.pop("mode", "off")
    if mode == "off":
        return Off()
    if mode == "uniform":
        return Uniform(float(d.get("sigma", 0.1)))
    if mode == "asrn":
        keys = AsrnConfig.__dataclass_fields__
        return Asrn(AsrnConfig(**{k: v for k, v in d.items() if k in keys}))
    raise ConfigError(f"unknown noiser mode {mode!r}")


def broken_bandit_config(**overrides) -> ExperimentConfig:
    """Zero-variance left arm against a noisy, better right arm."""
    base = ExperimentConfig(
        arms=(ArmSpec(0.0, 0.0), ArmSpec(1.0, 2.5)),
        num_agents=100,
        num_episodes=10_000,
        agent=AgentConfig(alpha=0.05, gamma=0.95),
    )
    return replace(base, **overrides)


def trace_config(**overrides) -> ExperimentConfig:
    """One greedy agent on a low-variance left arm and a very noisy right arm."""
    base = ExperimentConfig(
        arms=(ArmSpec(0.0, 0.5), ArmSpec(1.0, 7.0)),
        num_agents=1,
        num_episodes=10_000,
        agent=AgentConfig(alpha=0.1, gamma=0.9, epsilon0=0.0),
    )
    return replace(base, **overrides)


def sweep_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig(
        arms=(ArmSpec(0.0, 0.0), ArmSpec(1.0, 0.0)),
        num_agents=50,
        num_episodes=10_000,
        agent=AgentConfig(alpha=0.1, gamma=0.9),
        sweep=SweepConfig(),
    )
    return replace(base, **overrides)


@dataclass
class PopulationResult:
    log: RunLog
    noise_tables: dict[int, NoiseTable] = field(default_factory=dict)


def epsilon_schedule(agent: AgentConfig, num_episodes: int) -> np.ndarray:
    eps = np.empty(num_episodes)
    e = agent.epsilon0
    for t in range(num_episodes):
        eps[t] = e
        e = min(next_epsilon(e, agent, t), e)
    return eps


def _select(q: np.ndarray, eps: float, u_explore: np.ndarray, u_choice: np.ndarray) -> np.ndarray:
    n, k = q.shape
    is_max = q == q.max(axis=1, keepdims=True)
    counts = is_max.sum(axis=1)
    pick = np.minimum((u_choice * counts).astype(np.int64), counts - 1)
    greedy = (np.cumsum(is_max, axis=1) > pick[:, None]).argmax(axis=1)
    explore = np.minimum((u_choice * k).astype(np.int64), k - 1)
    return np.where(u_explore < eps, explore, greedy)


def _stack_tables(tables: list[NoiseTable]) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(t.edges) for t in tables)
    edges = np.full((len(tables), width), np.inf)
    noise = np.zeros((len(tables), width + 1))
    for i, t in enumerate(tables):
        edges[i, : len(t.edges)] = t.edges
        noise[i, : len(t.bin_noise)] = t.bin_noise
    return edges, noise


def simulate(
    config: ExperimentConfig,
    agent_ids: Sequence[int] | None = None,
    scope: tuple[int, ...] = (),
    shared_table: NoiseTable | None = None,
    seeds: Sequence[int] | None = None,
) -> PopulationResult:
    """Run ``agent_ids`` (default: all agents of ``config``) in one batch.

    ``seeds`` optionally gives each row its own master seed in place of
    ``config.master_seed``; a row's result equals running it alone.

    ``shared_table`` replaces per-agent calibration: the calibration window
    still runs un-noised, after which every agent uses the shared table.
    """
    if agent_ids is None:
        agent_ids = range(config.num_agents)
    ids = np.asarray(list(agent_ids), dtype=np.int64)
    n, T = len(ids), config.num_episodes
    env = config.env
    k = env.num_arms
    means, stds = env.means, env.stds
    a = config.agent
    alpha, gamma = a.alpha, a.gamma
    bootstrap_max = a.bootstrap == "max"

    if seeds is None:
        seeds = [config.master_seed] * n
    if len(seeds) != n:
        raise ValueError(f"got {len(seeds)} seeds for {n} agents")
    draws = [streams.agent_draws(int(s), int(i), T, scope) for s, i in zip(seeds, ids)]
    u_explore = np.array([d[streams.EXPLORE] for d in draws]).reshape(n, T)
    u_choice = np.array([d[streams.CHOICE] for d in draws]).reshape(n, T)
    z_reward = np.array([d[streams.REWARD] for d in draws]).reshape(n, T)
    z_noise = np.array([d[streams.NOISE] for d in draws]).reshape(n, T)
    eps = epsilon_schedule(a, T)

    actions = np.empty((n, T), dtype=np.int64)
    raw = np.empty((n, T))
    noised = np.empty((n, T))
    ups = np.empty((n, T))
    qlog = np.empty((n, T, k))

    q = np.tile(init_optimal(means, gamma), (n, 1))
    rows = np.arange(n)
    mode = config.noiser
    calib = mode.config.calibration_steps if isinstance(mode, Asrn) else 0
    tables: dict[int, NoiseTable] = {}
    edges = noise = None

    for t in range(T):
        act = _select(q, eps[t], u_explore[:, t], u_choice[:, t])
        r = means[act] + stds[act] * z_reward[:, t]
        q_a = q[rows, act]
        target_base = gamma * q.max(axis=1) if bootstrap_max else 0.0

        if isinstance(mode, Uniform):
            r_used = r + mode.sigma * z_noise[:, t]
        elif edges is not None:
            would_be = np.abs(alpha * (r + target_base - q_a))
            b = (edges <= would_be[:, None]).sum(axis=1)
            r_used = r + noise[rows, b] * z_noise[:, t]
        else:
            r_used = r

        delta = alpha * (r_used + target_base - q_a)
        q[rows, act] = q_a + delta
        actions[:, t] = act
        raw[:, t] = r
        noised[:, t] = r_used
        ups[:, t] = np.abs(delta)
        qlog[:, t] = q

        if calib and t == calib - 1:
            if shared_table is not None:
                edges, noise = _stack_tables([shared_table] * n)
                continue
            # calibration samples are the raw rewards and their (un-noised) updates
            for i, agent in enumerate(ids):
                buf = CalibrationBuffer(calib, ups[i, :calib].tolist(), raw[i, :calib].tolist())
                tables[int(agent)] = finalize_calibration(buf, mode.config)
            edges, noise = _stack_tables([tables[int(i)] for i in ids])

    log = RunLog(
        agent_ids=ids,
        actions=actions,
        raw_rewards=raw,
        noised_rewards=noised,
        upsilons=ups,
        epsilons=np.tile(eps, (n, 1)),
        q_values=qlog,
    )
    if shared_table is not None:
        tables = {int(i): shared_table for i in ids}
    return PopulationResult(log, tables)


def _chunks(ids: Sequence[int], parts: int) -> list[list[int]]:
    parts = max(1, min(parts, len(ids)))
    return [list(c) for c in np.array_split(np.asarray(ids), parts) if len(c)]


def _simulate_star(args):
    return simulate(*args)


def _pooled_table(config: ExperimentConfig, threads: int) -> NoiseTable:
    """One table calibrated on the concatenated calibration windows of all agents."""
    cfg = config.noiser.config
    calib_run = replace(config, num_episodes=cfg.calibration_steps, noiser=Off())
    log = run_population(calib_run, threads=threads).log
    ups = log.upsilons.ravel().tolist()
    rew = log.raw_rewards.ravel().tolist()
    return finalize_calibration(CalibrationBuffer(len(ups), ups, rew), cfg)


def run_population(config: ExperimentConfig, threads: int = 1, agent_ids: Sequence[int] | None = None) -> PopulationResult:
    """Run every agent for ``num_episodes``; results are ordered by agent id.

    With ``threads > 1`` agents are split across worker processes; output is
    identical to the single-process run.
    """
    if agent_ids is None:
        agent_ids = list(range(config.num_agents))
    shared = None
    if isinstance(config.noiser, Asrn) and config.noiser.config.pooled:
        # calibrate on a calibration-only replay first; the full run reproduces that window exactly
        shared = _pooled_table(config, threads)
    if threads <= 1 or len(agent_ids) < 2:
        return simulate(config, agent_ids, (), shared)
    jobs = [(config, chunk, (), shared) for chunk in _chunks(agent_ids, threads)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_simulate_star, jobs))
    tables = {}
    for p in parts:
        tables.update(p.noise_tables)
    return PopulationResult(RunLog.concat([p.log for p in parts]), tables)


def final_success_fraction(log: RunLog) -> float:
    return float(success_series(log)[-1])


@dataclass
class TraceResult:
    log: RunLog
    events: list[tuple[int, str]]

    @property
    def q_left(self) -> np.ndarray:
        return self.log.q_values[0, :, 0]

    @property
    def q_right(self) -> np.ndarray:
        return self.log.q_values[0, :, 1]


def run_single_trace(config: ExperimentConfig) -> TraceResult:
    """Full Q trajectory of a single agent plus its trap enter/exit events."""
    if config.num_agents != 1:
        raise ConfigError(f"a trace runs exactly one agent, got num_agents={config.num_agents}")
    if config.agent.epsilon0 != 0:
        raise ConfigError(f"a trace runs without exploration, got epsilon0={config.agent.epsilon0}")
    log = simulate(config).log
    return TraceResult(log, detect_trap_events(log.q_values[0], start=_trace_start(config)))


def _trace_start(config: ExperimentConfig) -> str:
    return "right" if config.arms[1].mean > config.arms[0].mean else "left"


def scan_trace_seeds(config: ExperimentConfig, seeds: Sequence[int]) -> dict[int, list[tuple[int, str]]]:
    """Trap events of :func:`run_single_trace` for each master seed.

    All seeds run as one batch; each row matches its standalone trace.
    """
    if config.num_agents != 1 or config.agent.epsilon0 != 0:
        raise ConfigError("trace scans need num_agents=1 and epsilon0=0")
    seeds = list(seeds)
    log = simulate(config, [0] * len(seeds), seeds=seeds).log
    start = _trace_start(config)
    return {s: detect_trap_events(log.q_values[i], start=start) for i, s in enumerate(seeds)}


@dataclass(frozen=True)
class SweepCell:
    sigma_left: float
    sigma_right: float
    num_success: int
    num_agents: int


def _cell_scope(sigma_left: float, sigma_right: float) -> tuple[int, ...]:
    # keyed by the sigmas themselves so a cell's result does not depend on the grid around it
    return (SWEEP_SCOPE, round(sigma_left * 1_000_000), round(sigma_right * 1_000_000))


def run_sweep_cell(config: ExperimentConfig, sigma_left: float, sigma_right: float) -> SweepCell:
    arms = (ArmSpec(config.arms[0].mean, sigma_left), ArmSpec(config.arms[1].mean, sigma_right))
    cfg = replace(config, arms=arms, sweep=None)
    log = simulate(cfg, scope=_cell_scope(sigma_left, sigma_right)).log
    final = log.q_values[:, -1]
    wins = int(np.sum(final[:, 1] > final[:, 0]))
    return SweepCell(sigma_left, sigma_right, wins, cfg.num_agents)


def _cell_star(args):
    return run_sweep_cell(*args)


def run_variance_sweep(config: ExperimentConfig, threads: int = 1) -> list[SweepCell]:
    """Successes per ``(sigma_left, sigma_right)`` cell, ordered by sigma_left
    then sigma_right. A success is an agent whose final greedy arm is
    strictly the right one."""
    if config.sweep is None:
        raise ConfigError("variance sweep needs a sweep section")
    jobs = [(config, sl, sr) for sl in config.sweep.sigma_left_values for sr in config.sweep.sigma_right_values]
    if threads <= 1:
        return [run_sweep_cell(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_cell_star, jobs, chunksize=1))


def calibrate(config: ExperimentConfig, agent_id: int = 0) -> NoiseTable:
    """Run only the calibration window and return the resulting table.

    Uses the pooled table across all agents when the config asks for pooling.
    """
    if not isinstance(config.noiser, Asrn):
        raise ConfigError("calibration needs the asrn noiser")
    cfg = config.noiser.config
    if cfg.pooled:
        return _pooled_table(config, threads=1)
    short = replace(config, num_episodes=cfg.calibration_steps)
    return simulate(short, [agent_id]).noise_tables[agent_id]
