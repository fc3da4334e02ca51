"""The Fokker-Planck limit and its spectral gap.

In logarithmic time the rescaled density obeys dR/ds = R'' + 2(yR)' at leading order.
Its spectrum is 0, -2, -4, ...; the Gaussian is the steady state.  The
relative entropy is quadratic in the perturbation, so it decays at twice
the gap.
"""

import numpy as np

from isofluid.fokker_planck import (
    FPState, fit_decay_rate, fp_matrix, fp_relax, spectral_gap, stationarity_residual)
from isofluid.rescaled_solver import Grid1D

for n in (100, 200, 400):
    print(f"n = {n}: |L Gamma| = {stationarity_residual(Grid1D(10.0, n)):.3e}")

grid = Grid1D(8.0, 400)
ev = np.sort(np.linalg.eigvals(fp_matrix(grid)).real)[::-1]
print("\nleading eigenvalues:", ", ".join(f"{v:.4f}" for v in ev[:5]))

y = grid.centers
R0 = np.exp(-(y - 1) ** 2 / 0.5) + 0.5 * np.exp(-(y + 1.5) ** 2 / 0.3)
recs = []
fp_relax(FPState(0.0, grid, R0), 2.5, recs.append, observe_every=0.25)
print("\n    s     L1 to Gamma   rel. entropy   mean      variance")
for r in recs:
    print(f"  {r.s:4.2f}  {r.l1:11.4e}  {r.relative_entropy:12.4e}  {r.mean:+.5f}"
          f"  {r.variance:.5f}")
s = np.array([r.s for r in recs])
H = np.array([r.relative_entropy for r in recs])
rate = fit_decay_rate(s[s >= 1.0], H[s >= 1.0])
print(f"\nentropy decay rate {rate:.4f}; half of it {rate / 2:.4f} vs spectral gap "
      f"{spectral_gap(grid):.4f}")
