# %% [markdown]
# # Update magnitude by chosen arm
#
# The update magnitude `upsilon = |Q_new - Q_old|` is the tabular stand-in for
# a value network's loss. Agents pulling the noisy right arm see large
# updates; agents pulling the deterministic left arm see small ones. ASRN
# evens the two out once calibration ends.

# %%
from asrnlab import Asrn, broken_bandit_config, run_population
from asrnlab.telemetry import grouped_mean_upsilon_series, smooth, window_mean_upsilon

plain = run_population(broken_bandit_config()).log
noised = run_population(broken_bandit_config(noiser=Asrn())).log

# %%
for name, log, start in (("plain", plain, 9000), ("asrn", noised, 1000)):
    right, left = window_mean_upsilon(log, start)
    print(f"{name:5s} episodes {start}+  mean upsilon right={right:.4f}  left={left:.4f}  ratio={right / left:.2f}")

# %%
right, left = grouped_mean_upsilon_series(plain)
print("episode-wise means are nan where no agent pulled that arm; first episodes:")
print(right[:5], left[:5])
