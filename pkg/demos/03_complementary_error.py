# %% [markdown]
# # Entering and leaving the trap
#
# A single greedy agent (no exploration) on a left arm with std 0.5 and a
# right arm with std 7. Its right-arm estimate occasionally falls below the
# left one (the agent enters the trap); it only leaves when a run of bad
# left-arm rewards pushes the left estimate back under the frozen right one.

# %%
from asrnlab import run_single_trace, trace_config
from asrnlab.experiments import scan_trace_seeds

trace = run_single_trace(trace_config())
print("events of seed 0:", trace.events[:6], "..." if len(trace.events) > 6 else "")

# %%
scan = scan_trace_seeds(trace_config(), range(200))
exits = sum(any(k == "exit" for _, k in ev) for ev in scan.values())
stuck = sum(bool(ev) and ev[-1][1] == "enter" for ev in scan.values())
print(f"{exits}/200 seeds leave the trap at least once, {stuck}/200 end trapped")

# %%
seed = next(s for s, ev in scan.items() if len(ev) >= 2)
t = run_single_trace(trace_config(master_seed=seed))
enter, leave = t.events[0][0], t.events[1][0]
print(f"seed {seed}: enter at {enter} with Q_r={t.q_right[enter]:.3f}, Q_l={t.q_left[enter]:.3f}")
print(f"         exit at {leave} with Q_r={t.q_right[leave]:.3f}, Q_l={t.q_left[leave]:.3f}")
print("Q_r while trapped is frozen:", bool((t.q_right[enter:leave] == t.q_right[enter]).all()))
