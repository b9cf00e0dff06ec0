# %% [markdown]
# # Inspecting a calibrated noise table
#
# After the calibration window each bin of update magnitudes carries a reward
# spread S_b and a noise scale N_b with S_b**2 + N_b**2 = S_max**2.

# %%
import numpy as np

from asrnlab import Asrn, AsrnConfig, NoiseTable, broken_bandit_config
from asrnlab.cli import bin_summary
from asrnlab.experiments import calibrate

table = calibrate(broken_bandit_config(noiser=Asrn(AsrnConfig(num_bins=10, calibration_steps=1000))))
print(bin_summary(table))

# %%
s, n = np.array(table.bin_std), np.array(table.bin_noise)
print("max |S^2 + N^2 - S_max^2|:", np.abs(s**2 + n**2 - table.s_max**2).max())
assert NoiseTable.loads(table.dumps()) == table
