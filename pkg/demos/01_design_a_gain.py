"""Design a static output feedback gain for the five-state plant.

Run with ``python3 demos/01_design_a_gain.py``.

The plant is open-loop unstable and carries a sinusoidal nonlinearity with
Lipschitz constant 0.3 plus a norm-bounded parametric uncertainty. We ask
for the gain that keeps the closed loop stable with the largest admissible
Lipschitz constant while holding the disturbance attenuation at mu = 2.5.
"""

import numpy as np

from robust_sof.synthesis import (
    SynthesisRequest,
    closed_loop_certificate,
    max_admissible_lipschitz,
    synth_corollary1,
    synth_theorem1,
)
from robust_sof.system import benchmark_system

np.set_printoptions(precision=4, suppress=True)
plant = benchmark_system()
print("open-loop spectral radius:", f"{max(abs(np.linalg.eigvals(plant.A))):.4f}")

# The equality-constrained formulation recovers K exactly as Q^{-1} G.
res = synth_corollary1(plant, SynthesisRequest(mu=2.5))
print(f"\nstatus {res.status.value} after {res.solution.iterations} Newton steps")
print(f"alpha* = {res.alpha_star:.4f}, eps1* = {res.eps1_star:.4f}, gamma* = {res.gamma_star:.5f}")
print("K =\n", res.K)
print("closed-loop spectral radius:", f"{max(abs(np.linalg.eigvals(plant.closed_loop(res.K).A))):.4f}")

# Rebuild the analysis inequalities on A + B1 K C with plain numpy.
print("\nlargest eigenvalue per certificate block (all must be < 0):")
for name, val in closed_loop_certificate(plant, res).items():
    print(f"  {name:12s} {val: .3e}")

# gamma* is the value at the weighted optimum. Bisecting on the fixed-gamma
# feasibility problem gives the largest constant alone.
print(f"\nlargest feasible fixed gamma (bisection): {max_admissible_lipschitz(plant, SynthesisRequest(), upper=1.0):.5f}")

# The normalisation P <= I is a modelling choice; dropping it enlarges the set.
free = synth_corollary1(plant, SynthesisRequest(bound_p_by_identity=False))
print(f"without P <= I: gamma* = {free.gamma_star:.5f}")

# The unconstrained-structure route needs a rank test before K is exact.
t1 = synth_theorem1(plant, SynthesisRequest(method="theorem1"))
print(f"\nKronecker route: gamma* = {t1.gamma_star:.5f}, rank condition "
      f"{'holds' if t1.rank_condition_holds else 'fails'}, residual {t1.gain_residual:.3f}")
worst = max(closed_loop_certificate(plant, t1).values())
print(f"certificate on the least-squares gain: largest eigenvalue {worst:.3e}"
      + ("  (not certified)" if worst > 0 else ""))
