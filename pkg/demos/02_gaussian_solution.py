"""An exact Gaussian solution and the finite-volume solver.

A Gaussian density with affine velocity stays Gaussian under the
isothermal Euler, Korteweg and quantum Navier-Stokes systems; its width
follows the scaling ODE.  This gives an exact reference for the solver in
rescaled variables y = x / tau(t).  The L1 error falls about fourfold per grid
doubling.
"""

import math

import numpy as np

from isofluid.gaussian_explicit import (
    GaussianParams, density_at, evolve_gaussian, pde_residual, velocity_at)
from isofluid.rescaled_solver import Grid1D, Model, run, to_rescaled
from isofluid.scaling_ode import TauParams, integrate_tau


def fields(gs):
    return (lambda x: density_at(gs, x[:, None]), lambda x: velocity_at(gs, x[:, None])[:, 0])


for name, eps, nu in (("Euler", 0.0, 0.0), ("Korteweg", 1.0, 0.0), ("QNS", 1.0, 1.0)):
    gp = GaussianParams(d=1, b0=1.0, alpha0=2.0, beta0=0.5, c0=0.3, eps=eps, nu=nu)
    r1, r2 = pde_residual(gp, 1.0, 0.02), pde_residual(gp, 1.0, 0.01)
    print(f"{name:9s} PDE residual ratios under h -> h/2: "
          f"mass {r1[0] / r2[0]:.3f}, momentum {r1[1] / r2[1]:.3f}")

    theta = gp.mass / math.sqrt(math.pi)
    traj = integrate_tau(TauParams(), 1.0)
    g0, g1 = evolve_gaussian(gp, 0.0), evolve_gaussian(gp, 1.0)
    errs = []
    for n in (200, 400, 800):
        grid = Grid1D(10.0, n)
        model = Model(eps=eps, nu=nu)
        s = to_rescaled(None, *fields(g0), traj, 0.0, theta, grid, model)
        out = run(s, traj, 1.0, record=lambda st, tr: None)
        ref = to_rescaled(None, *fields(g1), traj, 1.0, theta, grid, model)
        errs.append(grid.integrate(np.abs(out.R - ref.R)) / ref.mass)
    print("          solver L1/mass at t = 1, n = 200/400/800: "
          + ", ".join(f"{e:.2e}" for e in errs)
          + f"  (ratios {errs[0] / errs[1]:.2f}, {errs[1] / errs[2]:.2f})")
