"""Close the loop and watch it converge.

Run with ``python3 demos/02_simulate_the_loop.py``. Writes a CSV and an SVG
into ``demos/output``.
"""

from pathlib import Path

import numpy as np

from robust_sof.simulator import empirical_l2_gain, lyapunov_decrement_check, simulate
from robust_sof.svg import write_state_plot
from robust_sof.synthesis import synth_corollary1
from robust_sof.system import DisturbanceSignal, UncertaintySignal, benchmark_system

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)
plant = benchmark_system()
design = synth_corollary1(plant)

# Worst-case-seeking uncertainty: a fresh random orthogonal F(k) each step.
F = UncertaintySignal("random_switching", q=plant.q, seed=11)
x0 = np.random.default_rng(11).standard_normal(plant.n)
x0 /= np.linalg.norm(x0)

traj = simulate(plant, design.K, None, F, None, x0, horizon=60, P=design.P)
ok, first_bad = lyapunov_decrement_check(traj)
print(f"|x(0)| = 1, |x(60)| = {np.linalg.norm(traj.x[-1]):.2e}")
print("V = x'Px strictly decreasing:", ok if ok else f"no, first at k={first_bad}")
traj.to_csv(out / "closed_loop.csv")
write_state_plot(traj, out / "closed_loop.svg", "Closed loop, random switching F(k)")

# Without feedback the same plant blows up.
open_loop = simulate(plant, np.zeros((plant.m, plant.p)), None, F, None, x0, horizon=60)
print(f"open loop: |x(60)| = {np.linalg.norm(open_loop.x[-1]):.2e}")
write_state_plot(open_loop, out / "open_loop.svg", "Open loop")

# Disturbance attenuation from rest: worst ratio over a small ensemble.
ws = [DisturbanceSignal("finite_random", d=plant.d, seed=s, horizon=40) for s in range(20)]
ws.append(DisturbanceSignal("impulse", d=plant.d))
gain = empirical_l2_gain(plant, design.K, None, F, ws, horizon=200)
print(f"empirical l2 gain {gain:.3f} against the designed bound {design.mu}")
print("files in", out)
