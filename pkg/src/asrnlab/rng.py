"""Deterministic per-agent random streams.

Every agent owns one independent stream per purpose. A stream is a Philox
counter-based generator keyed by ``(master_seed, *scope, agent_id, purpose)``
through :class:`numpy.random.SeedSequence`, so adding or removing agents never
shifts the numbers any other agent sees.
"""

from __future__ import annotations

import numpy as np

# purpose tags
EXPLORE = 0
CHOICE = 1
REWARD = 2
NOISE = 3

PURPOSES = (EXPLORE, CHOICE, REWARD, NOISE)


def stream(master_seed: int, agent_id: int, purpose: int, scope: tuple[int, ...] = ()) -> np.random.Generator:
    if master_seed < 0:
        raise ValueError(f"master_seed must be non-negative, got {master_seed}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(*scope, int(agent_id), int(purpose)))
    return np.random.Generator(np.random.Philox(seq))


def agent_streams(master_seed: int, agent_id: int, scope: tuple[int, ...] = ()) -> dict[int, np.random.Generator]:
    return {p: stream(master_seed, agent_id, p, scope) for p in PURPOSES}


def agent_draws(master_seed: int, agent_id: int, num_episodes: int, scope: tuple[int, ...] = ()) -> dict[int, np.ndarray]:
    """Pre-draw one value per episode for each purpose.

    Uniforms in [0, 1) for EXPLORE and CHOICE, standard normals for REWARD and
    NOISE. Draws are identical to consuming the same streams one scalar at a
    time, which is what the scalar agent/environment functions do.
    """
    gens = agent_streams(master_seed, agent_id, scope)
    return {
        EXPLORE: gens[EXPLORE].random(num_episodes),
        CHOICE: gens[CHOICE].random(num_episodes),
        REWARD: gens[REWARD].standard_normal(num_episodes),
        NOISE: gens[NOISE].standard_normal(num_episodes),
    }
