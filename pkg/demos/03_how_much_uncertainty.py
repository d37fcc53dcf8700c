"""How much extra nonlinearity can the loop absorb?

Run with ``python3 demos/03_how_much_uncertainty.py``.

The certified margin is gamma* minus the Lipschitz constant already present.
On this plant the certified gamma* is below the built-in nonlinearity's
constant, so the norm-wise certificate offers no margin even though the
simulated loop is robustly stable. The Monte Carlo harness shows how far
that empirical robustness goes.
"""

import numpy as np

from robust_sof.robustness import elementwise_bounds, normwise_margin, robustness_report
from robust_sof.simulator import monte_carlo_robustness
from robust_sof.synthesis import SynthesisRequest, synth_corollary1, synth_corollary2
from robust_sof.system import benchmark_system

np.set_printoptions(precision=5, suppress=True)
plant = benchmark_system()
design = synth_corollary1(plant)

margin = normwise_margin(plant.phi.lipschitz, design.gamma_star)
print(f"gamma* = {design.gamma_star:.5f}, nominal Lipschitz = {plant.phi.lipschitz}, margin = {margin:.4f}")

for extra in (0.0, 0.1, 0.3, 0.6, 1.0):
    frac = monte_carlo_robustness(plant, design.K, None, extra, trials=40, seed=3)
    print(f"  random extra nonlinearity with Lipschitz {extra:.1f}: {frac:.0%} of runs converge")

# Matrix-valued constants bound each entry of the nonlinearity's Jacobian.
mat = synth_corollary2(plant, SynthesisRequest(method="corollary2"))
print(f"\nmatrix bound, entries of Gamma*: min {mat.Gamma_star.min():.3e}, max {mat.Gamma_star.max():.3e}")
lo, hi = elementwise_bounds(np.zeros_like(mat.Gamma_star), np.abs(mat.Gamma_star))
print("admissible interval for entry (1,1):", f"[{lo[0, 0]:.3e}, {hi[0, 0]:.3e}]")
print("\nreport:", {k: v for k, v in robustness_report(plant.phi.lipschitz, design.gamma_star).to_dict().items()
                     if v is not None})
