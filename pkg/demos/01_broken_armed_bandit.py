# %% [markdown]
# # The broken-armed bandit
#
# Two arms: the left one pays exactly 0 every time, the right one pays
# Normal(1, 2.5**2). Every agent starts from the optimal Q-table, so they all
# begin by pulling right. We track how many agents still prefer the right arm
# as exploration decays, with and without adaptive symmetric reward noising.

# %%
import numpy as np

from asrnlab import AgentConfig, Asrn, broken_bandit_config, run_population, smooth
from asrnlab.telemetry import success_series

try:
    import matplotlib.pyplot as plt
except ImportError:  # plotting is optional
    plt = None

# %%
results = {}
for bootstrap in ("max", "terminal"):
    agent = AgentConfig(alpha=0.05, gamma=0.95, bootstrap=bootstrap)
    for label, noiser in (("plain", None), ("asrn", Asrn())):
        cfg = broken_bandit_config(agent=agent) if noiser is None else broken_bandit_config(agent=agent, noiser=noiser)
        log = run_population(cfg).log
        results[bootstrap, label] = log
        print(f"bootstrap={bootstrap:8s} {label:5s} final success fraction: {success_series(log)[-1]:.2f}")

# %% [markdown]
# With the bootstrapped target (`max`, the update as written) the right arm's
# value sits near 20 with a spread of under 2, so it essentially never drops
# below the broken arm: the trap does not form. When every pull is treated as
# a terminal step (`terminal`), values hover near the arm means, the noisy
# right arm regularly dips below zero, and agents get stuck on the broken arm.
# ASRN gives the broken arm noise comparable to the right arm's, which lets
# trapped agents escape.

# %%
first_ten = results["terminal", "plain"].raw_rewards[:10]
print("smoothed reward of the first agent, every 1000 episodes:")
print(np.round(smooth(first_ten[0], 50)[::1000], 2))

# %%
if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for (bootstrap, label), log in results.items():
        ax.plot(smooth(success_series(log), 50), label=f"{bootstrap} / {label}")
    ax.set_xlabel("episode")
    ax.set_ylabel("fraction preferring the right arm")
    ax.legend()
    fig.savefig("broken_armed_bandit.png", dpi=120)
