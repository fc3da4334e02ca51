"""The dispersion scale tau(t).

Every solution spreads like tau(t), the solution of tau'' = 2 kappa / tau with
tau(0) = 1 and tau'(0) = 0.  It grows like 2 t sqrt(kappa ln t), but the
relative correction only decays like ln(ln t) / ln t, so the convergence is
slow.  Capillarity and viscosity perturb tau by a relative amount that dies
out at large times.
"""

import math

from isofluid.scaling_ode import TauParams, first_integral, integrate_tau, tau_asymptote

T = 1e6

for kappa in (1.0, math.pi):
    traj = integrate_tau(TauParams(kappa=kappa), T)
    fi = first_integral(traj, -1)
    print(f"kappa = {kappa:.4f}: first integral at t = {T:g} is {fi:.3e} (exactly 0 in theory)")
    print("        t        tau(t)   2t sqrt(kappa ln t)   rel. error")
    for t in (1e1, 1e2, 1e3, 1e4, 1e5, 1e6):
        tau = float(traj.tau_at(t))
        asym = tau_asymptote(kappa, t)[0]
        print(f"  {t:9.0e}  {tau:12.5e}  {asym:12.5e}  {abs(tau / asym - 1):11.5f}")
    print()

base = integrate_tau(TauParams(), 1e5)
print("relative effect of (eps, nu) on tau:")
for eps, nu in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
    traj = integrate_tau(TauParams(eps=eps, nu=nu), 1e5)
    effects = [abs(float(traj.tau_at(t)) / float(base.tau_at(t)) - 1) for t in (1e2, 1e3, 1e4, 1e5)]
    print(f"  eps={eps:g} nu={nu:g}: " + "  ".join(f"{e:.3e}" for e in effects))
