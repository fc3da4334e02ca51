"""Fokker-Planck flow d_s R = d_y(d_y R + 2 y R) on [-L, L].

The operator annihilates Gamma = exp(-y**2) and has continuum spectrum
0, -2, -4, ...  The discretisation is conservative: fluxes
J = d_y R + 2 y R live on cell faces, with J = 0 on the two boundary faces,
so the discrete mass is conserved exactly.  Time stepping is Heun's RK2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParams, StabilityViolation
from .rescaled_solver import Grid1D

MAX_DENSE_N = 512


@dataclass(frozen=True)
class FPState:
    s: float
    grid: Grid1D
    R: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        if R.shape != (self.grid.n,):
            raise InvalidParams("R must have one value per cell")
        object.__setattr__(self, "R", R)

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.R)


@dataclass(frozen=True)
class FPRecord:
    s: float
    mass: float
    l1: float
    relative_entropy: float
    mean: float
    variance: float


def max_stable_ds(grid: Grid1D) -> float:
    """dy**2/2 reduced by the drift: the Gershgorin bound of the discrete operator."""
    return grid.dy**2 / (2.0 * (1.0 + grid.L * grid.dy))


def fp_rhs(grid: Grid1D, R):
    dy = grid.dy
    yf = grid.faces[1:-1]
    J = np.zeros(grid.n + 1)
    J[1:-1] = (R[1:] - R[:-1]) / dy + yf * (R[1:] + R[:-1])
    return (J[1:] - J[:-1]) / dy


def fp_step(state: FPState, ds: float) -> FPState:
    if not ds > 0:
        raise InvalidParams(f"ds must be > 0, got {ds}")
    limit = max_stable_ds(state.grid)
    if ds > limit * (1 + 1e-12):
        raise StabilityViolation(f"ds = {ds:.3e} exceeds the explicit bound {limit:.3e}")
    g = state.grid
    k1 = fp_rhs(g, state.R)
    R1 = state.R + ds * k1
    k2 = fp_rhs(g, R1)
    return replace(state, s=state.s + ds, R=state.R + 0.5 * ds * (k1 + k2))


def fp_record(state: FPState) -> FPRecord:
    g = state.grid
    y = g.centers
    R = state.R
    mass = state.mass
    G = np.exp(-y**2)
    c = mass / g.integrate(G)
    lnGp = np.log(c) - y**2
    pos = R > 0
    integrand = np.zeros_like(R)
    integrand[pos] = R[pos] * (np.log(R[pos]) - lnGp[pos])
    mean = g.integrate(y * R) / mass
    var = g.integrate((y - mean) ** 2 * R) / mass
    return FPRecord(s=state.s, mass=mass, l1=g.integrate(np.abs(R - c * G)),
                    relative_entropy=g.integrate(integrand), mean=mean, variance=var)


def fp_relax(initial: FPState, s_end: float, sink: Optional[Callable] = None,
             observe_every: Optional[float] = None, ds: Optional[float] = None) -> FPState:
    """Evolve to ``s_end`` and pass an ``FPRecord`` to ``sink`` at each observation."""
    if not s_end > initial.s:
        raise InvalidParams("s_end must exceed the initial time")
    ds_max = max_stable_ds(initial.grid) if ds is None else ds
    every = (s_end - initial.s) if observe_every is None else observe_every
    if not every > 0:
        raise InvalidParams("observe_every must be > 0")
    state = initial
    if sink is not None:
        sink(fp_record(state))
    k = 1
    while state.s < s_end * (1 - 1e-14):
        target = min(initial.s + k * every, s_end)
        n_steps = int(np.ceil((target - state.s) / ds_max - 1e-9))
        h = (target - state.s) / n_steps
        for _ in range(n_steps):
            state = fp_step(state, h)
        state = replace(state, s=target)
        if sink is not None:
            sink(fp_record(state))
        k += 1
    return state


def fp_matrix(grid: Grid1D) -> np.ndarray:
    """Dense matrix of the discrete operator (n <= 512)."""
    if grid.n > MAX_DENSE_N:
        raise InvalidParams(f"dense operator limited to n <= {MAX_DENSE_N}")
    A = np.zeros((grid.n, grid.n))
    for j in range(grid.n):
        e = np.zeros(grid.n)
        e[j] = 1.0
        A[:, j] = fp_rhs(grid, e)
    return A


def spectral_gap(grid: Grid1D) -> float:
    """Magnitude of the smallest nonzero eigenvalue of the discrete operator."""
    ev = np.linalg.eigvals(fp_matrix(grid))
    mags = np.sort(np.abs(ev.real))
    return float(mags[1])


def discrete_equilibrium(grid: Grid1D, mass: float = None) -> np.ndarray:
    """Null vector of the discrete operator: zero flux on every face.

    J = 0 gives R[i+1] (1 + y dy) = R[i] (1 - y dy) at the face y between
    them, which stays positive while L dy < 1.
    """
    yf = grid.faces[1:-1]
    ratio = (1.0 - yf * grid.dy) / (1.0 + yf * grid.dy)
    if np.any(ratio <= 0):
        raise InvalidParams("discrete equilibrium needs L * dy < 1")
    logR = np.concatenate([[0.0], np.cumsum(np.log(ratio))])
    R = np.exp(logR - logR.max())
    target = grid.integrate(np.exp(-grid.centers**2)) if mass is None else mass
    return R * target / grid.integrate(R)


def stationarity_residual(grid: Grid1D) -> float:
    """max |L_h Gamma|, which is O(dy**2) for the central discretisation."""
    return float(np.max(np.abs(fp_rhs(grid, np.exp(-grid.centers**2)))))


def fit_decay_rate(s, values) -> float:
    """Least-squares rate r in values ~ C exp(-r s)."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(values, dtype=float)
    slope = np.polyfit(s, np.log(v), 1)[0]
    return float(-slope)
