# %% [markdown]
# # Success over a grid of arm variances
#
# 50 optimally initialised agents per cell, 10 000 episodes, alpha 0.1,
# gamma 0.9. A success is an agent that prefers the right arm at the end.
# The full default grid (21 x 20 cells) takes a couple of minutes on one core;
# a coarser grid is used here.

# %%
import numpy as np

from asrnlab import SweepConfig, run_variance_sweep, sweep_config

left = (0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0)
right = (1.0, 2.5, 5.0, 7.0, 10.0)
cells = run_variance_sweep(sweep_config(sweep=SweepConfig(left, right)))
grid = np.array([c.num_success for c in cells]).reshape(len(left), len(right))

# %%
print("rows: sigma_left, columns: sigma_right")
print("       " + " ".join(f"{r:6.2f}" for r in right))
for sl, row in zip(left, grid):
    print(f"{sl:6.2f} " + " ".join(f"{v:6d}" for v in row))
