"""Explicit Gaussian solutions of the isothermal Euler, Korteweg and
quantum Navier-Stokes systems

    d_t rho + div(rho u) = 0,
    d_t(rho u) + div(rho u x u) + kappa grad rho
        = eps**2/2 rho grad(Lap sqrt(rho) / sqrt(rho)) + nu div(rho D(u)),

with D(u) the symmetric part of grad u.  The family is

    rho = b exp(-sum_j alpha_j (x_j - xbar_j)**2),   u_j = beta_j x_j + c_j,

with alpha_j = alpha0_j / tau_j**2, beta_j = tau_j'/tau_j and each tau_j
solving the scaling ODE with kappa -> kappa alpha0_j, eps -> eps alpha0_j,
nu -> 2 nu alpha0_j, tau_j(0) = 1, tau_j'(0) = beta0_j.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams
from .scaling_ode import DEFAULT_REL_TOL, TauParams, integrate_tau

BOX_HALF_WIDTH = 6.0


@dataclass(frozen=True)
class GaussianParams:
    d: int
    b0: float
    alpha0: tuple
    beta0: tuple
    c0: tuple
    kappa: float = 1.0
    eps: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        for name in ("alpha0", "beta0", "c0"):
            object.__setattr__(self, name,
                               tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            raise InvalidParams(f"d must be a positive integer, got {self.d}")
        if not (len(self.alpha0) == len(self.beta0) == len(self.c0) == self.d):
            raise InvalidParams("alpha0, beta0 and c0 must each have d entries")
        if not self.b0 > 0:
            raise InvalidParams(f"b0 must be > 0, got {self.b0}")
        if not all(a > 0 for a in self.alpha0):
            raise InvalidParams("every alpha0 must be > 0")
        if not self.kappa > 0:
            raise InvalidParams("kappa must be > 0")
        if self.eps < 0 or self.nu < 0:
            raise InvalidParams("eps and nu must be >= 0")

    def tau_params(self, j: int) -> TauParams:
        """Scaling-ODE parameters governing direction ``j``."""
        a0 = self.alpha0[j]
        return TauParams(alpha=1.0, beta=self.beta0[j], kappa=self.kappa * a0,
                         eps=self.eps * a0, nu=2.0 * self.nu * a0)

    @property
    def mass(self) -> float:
        return self.b0 * float(np.prod(np.sqrt(np.pi / np.asarray(self.alpha0))))


@dataclass(frozen=True)
class GaussianState:
    t: float
    b: float
    alpha: np.ndarray
    beta: np.ndarray
    xbar: np.ndarray
    c: np.ndarray
    tauj: np.ndarray
    taujdot: np.ndarray

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def mass(self) -> float:
        return self.b * float(np.prod(np.sqrt(np.pi / self.alpha)))

    def csv_row(self) -> list:
        vals = [self.t, self.b, *self.alpha, *self.beta, *self.xbar, *self.c]
        return [repr(float(v)) for v in vals]


def csv_header(d: int) -> list:
    cols = ["t", "b"]
    for name in ("alpha", "beta", "xbar", "c"):
        cols += [f"{name}_{j + 1}" for j in range(d)]
    return cols


def write_states(path, states) -> None:
    states = list(states)
    if not states:
        raise InvalidParams("no states to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(states[0].d))
        for s in states:
            w.writerow(s.csv_row())


def _assemble(params: GaussianParams, t: float, tau, taudot) -> GaussianState:
    tau = np.asarray(tau, dtype=float)
    taudot = np.asarray(taudot, dtype=float)
    alpha0 = np.asarray(params.alpha0)
    c0 = np.asarray(params.c0)
    return GaussianState(
        t=float(t),
        b=params.b0 / float(np.prod(tau)),
        alpha=alpha0 / tau**2,
        beta=taudot / tau,
        xbar=c0 * t,
        c=c0 * (1.0 - taudot * t / tau),
        tauj=tau,
        taujdot=taudot,
    )


def evolve_gaussian(params: GaussianParams, t: float,
                    rel_tol: float = DEFAULT_REL_TOL) -> GaussianState:
    """State of the Gaussian solution at time ``t >= 0``."""
    if not t >= 0:
        raise InvalidParams(f"t must be >= 0, got {t}")
    if t == 0:
        return _assemble(params, 0.0, np.ones(params.d), params.beta0)
    tau = np.empty(params.d)
    taudot = np.empty(params.d)
    for j in range(params.d):
        traj = integrate_tau(params.tau_params(j), t, rel_tol=rel_tol)
        tau[j] = traj.tau[-1]
        taudot[j] = traj.taudot[-1]
    return _assemble(params, t, tau, taudot)


def evolve_gaussian_many(params: GaussianParams, times,
                         rel_tol: float = DEFAULT_REL_TOL) -> list:
    """States at several times from one integration per direction.

    Values between accepted steps come from Hermite interpolation, so they
    carry an extra error of order 1e-8 relative at the default tolerance.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise InvalidParams("times must be >= 0")
    t_max = float(times.max())
    if t_max == 0:
        return [evolve_gaussian(params, 0.0) for _ in times]
    trajs = [integrate_tau(params.tau_params(j), t_max, rel_tol=rel_tol)
             for j in range(params.d)]
    tau = np.array([tr.tau_at(times) for tr in trajs])
    taudot = np.array([tr.taudot_at(times) for tr in trajs])
    return [_assemble(params, t, tau[:, k], taudot[:, k]) for k, t in enumerate(times)]


def density_at(state: GaussianState, x):
    """b exp(-sum_j alpha_j (x_j - xbar_j)**2); ``x`` has trailing axis of length d."""
    x = np.asarray(x, dtype=float)
    q = np.sum(state.alpha * (x - state.xbar) ** 2, axis=-1)
    out = state.b * np.exp(-q)
    return float(out) if np.ndim(out) == 0 else out


def velocity_at(state: GaussianState, x):
    """(beta_j x_j + c_j)_j."""
    x = np.asarray(x, dtype=float)
    return state.beta * x + state.c


def _fields(state: GaussianState, axes):
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.stack(mesh, axis=-1)
    rho = density_at(state, x)
    u = velocity_at(state, x)
    return np.asarray(rho), np.moveaxis(u, -1, 0)


def pde_residual(params: GaussianParams, t: float, h: float,
                 rel_tol: float = 1e-12, margin: int = 4):
    """Max-norm residuals (mass, momentum) of the exact Gaussian on a grid.

    Space derivatives are central differences of spacing ``h`` on the box
    xbar_j +- 6 sigma_j with sigma_j = (2 alpha_j)**-1/2; the time derivative
    is the centered difference over t +- h (one-sided second order when
    t < h).  The outer ``margin`` cells, where nested differences become
    one-sided, are excluded.
    """
    if not h > 0:
        raise InvalidParams(f"h must be > 0, got {h}")
    if not t >= 0:
        raise InvalidParams(f"t must be >= 0, got {t}")
    d = params.d
    state = evolve_gaussian(params, t, rel_tol=rel_tol)
    sigma = 1.0 / np.sqrt(2.0 * state.alpha)
    axes = []
    for j in range(d):
        n = int(np.ceil(BOX_HALF_WIDTH * sigma[j] / h))
        axes.append(state.xbar[j] + h * np.arange(-n, n + 1))
    if 2 * margin + 1 >= min(len(a) for a in axes):
        raise InvalidParams("h too large for the evaluation box")

    if t >= h:
        offsets, weights = (-h, h), (-0.5 / h, 0.5 / h)
    else:
        offsets, weights = (0.0, h, 2 * h), (-1.5 / h, 2.0 / h, -0.5 / h)
    drho_dt = 0.0
    dm_dt = 0.0
    for off, w in zip(offsets, weights):
        s = state if off == 0 else evolve_gaussian(params, t + off, rel_tol=rel_tol)
        r, v = _fields(s, axes)
        drho_dt = drho_dt + w * r
        dm_dt = dm_dt + w * r * v

    rho, u = _fields(state, axes)

    def grad(f, j):
        return np.gradient(f, h, axis=j)

    res_mass = drho_dt + sum(grad(rho * u[j], j) for j in range(d))

    sqrt_rho = np.sqrt(rho)
    ds = [grad(sqrt_rho, j) for j in range(d)]
    lap_rho = sum(grad(grad(rho, j), j) for j in range(d))
    du = [[grad(u[i], j) for j in range(d)] for i in range(d)]
    res_mom = []
    for i in range(d):
        conv = sum(grad(rho * u[i] * u[j], j) for j in range(d))
        bohm = (0.25 * params.eps**2 * grad(lap_rho, i)
                - params.eps**2 * sum(grad(ds[i] * ds[j], j) for j in range(d)))
        visc = params.nu * sum(grad(rho * 0.5 * (du[i][j] + du[j][i]), j)
                               for j in range(d))
        res_mom.append(dm_dt[i] + conv + params.kappa * grad(rho, i) - bohm - visc)

    inner = tuple(slice(margin, -margin) for _ in range(d))
    rm = float(np.max(np.abs(res_mass[inner])))
    rq = float(max(np.max(np.abs(r[inner])) for r in res_mom))
    return rm, rq
