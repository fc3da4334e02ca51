"""Isentropic Euler, P = kappa rho**gamma, in compactified self-similar variables.

With rho(t, x) = (1+t)**-d R(sigma, y), u = U/(1+t) + x/(1+t), where
sigma = t/(1+t) and y = x/(1+t), the system becomes

    d_sigma R + d_y(RU) = 0,
    d_sigma(RU) + d_y(RU**2) + kappa (1-sigma)**(d gamma - d - 2) d_y(R**gamma) = 0,

so t in [0, inf) maps to sigma in [0, 1).  The scheme is a Rusanov flux on
the reconstruction of ``rescaled_solver`` with SSP-RK2 in time.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import CFLViolation, InvalidParams, NegativeDensity
from .rescaled_solver import (
    CFL, GHOSTS, MAX_HALVINGS, FluidState1D, Grid1D, Model, _clean, _density_slope,
    _limited_slope, frame_name, run, velocity, write_fields, VACUUM_FLOOR)
from .pressure import isothermal
from .scaling_ode import TauParams, integrate_tau

BOUNDARIES = ("outflow", "periodic")
MAX_PEAK = 0.05


@dataclass(frozen=True)
class IsentropicConfig:
    gamma: float
    kappa: float = 1.0
    d: int = 1
    grid: Grid1D = field(default_factory=Grid1D)
    sigma_end: float = 0.99
    boundary: str = "outflow"

    def __post_init__(self):
        if self.d != 1:
            raise InvalidParams("the isentropic solver is one-dimensional (d = 1)")
        if not 1.0 < self.gamma <= 1.0 + 2.0 / self.d:
            raise InvalidParams(f"gamma must lie in (1, 1 + 2/d], got {self.gamma}")
        if not self.kappa > 0:
            raise InvalidParams("kappa must be > 0")
        if not 0.0 < self.sigma_end <= 1.0:
            raise InvalidParams("sigma_end must lie in (0, 1]")
        if self.boundary not in BOUNDARIES:
            raise InvalidParams(f"boundary must be one of {BOUNDARIES}")

    @property
    def exponent(self) -> float:
        return self.d * self.gamma - self.d - 2


def coefficient(config: IsentropicConfig, sigma):
    """kappa (1 - sigma)**(d gamma - d - 2); exactly kappa when the exponent is 0."""
    if config.exponent == 0:
        return config.kappa * np.ones_like(np.asarray(sigma, dtype=float))[()]
    if np.any(np.asarray(sigma) >= 1.0) and config.exponent < 0:
        raise InvalidParams("the pressure coefficient is singular at sigma = 1")
    return config.kappa * (1.0 - np.asarray(sigma, dtype=float)) ** config.exponent


@dataclass(frozen=True)
class IsentropicState:
    sigma: float
    R: np.ndarray
    RU: np.ndarray
    config: IsentropicConfig

    def __post_init__(self):
        n = self.config.grid.n
        R = np.asarray(self.R, dtype=float)
        RU = np.asarray(self.RU, dtype=float)
        if R.shape != (n,) or RU.shape != (n,):
            raise InvalidParams("R and RU must have one value per cell")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "RU", RU)

    @property
    def y(self) -> np.ndarray:
        return self.config.grid.centers

    @property
    def U(self) -> np.ndarray:
        return velocity(self.R, self.RU, VACUUM_FLOOR * float(np.max(self.R)))

    @property
    def mass(self) -> float:
        return self.config.grid.integrate(self.R)


def symmetrized(R, gamma: float):
    """R**((gamma - 1)/2), the variable that symmetrises the system."""
    return np.maximum(np.asarray(R, dtype=float), 0.0) ** (0.5 * (gamma - 1.0))


def _sound_speed(R, c, gamma):
    return np.sqrt(gamma * c * np.maximum(R, 0.0) ** (gamma - 1.0))


def stable_dsigma(state: IsentropicState, dsigma_hint: float = 0.0, cfl: float = CFL) -> float:
    """CFL step with the coefficient taken at sigma + dsigma_hint (it grows with sigma)."""
    cfg = state.config
    c = float(coefficient(cfg, min(state.sigma + dsigma_hint, 1.0 - 1e-15)))
    lam = np.abs(state.U) + _sound_speed(state.R, c, cfg.gamma)
    lam_max = float(np.max(lam))
    return cfl * cfg.grid.dy / lam_max if lam_max > 0 else np.inf


def _rhs(cfg: IsentropicConfig, R, m, c):
    grid = cfg.grid
    mode = "wrap" if cfg.boundary == "periodic" else "edge"
    Rg = np.pad(R, GHOSTS, mode=mode)
    mg = np.pad(m, GHOSTS, mode=mode)
    Ug = velocity(Rg, mg, VACUUM_FLOOR * float(np.max(R)))
    lo = slice(GHOSTS - 1, GHOSTS + grid.n)
    hi = slice(GHOSTS, GHOSTS + grid.n + 1)
    dR = _density_slope(Rg)
    dU = _limited_slope(Ug)
    RL, RR = Rg[lo] + 0.5 * dR[lo], Rg[hi] - 0.5 * dR[hi]
    UL, UR = Ug[lo] + 0.5 * dU[lo], Ug[hi] - 0.5 * dU[hi]
    lamL = np.abs(UL) + _sound_speed(RL, c, cfg.gamma)
    lamR = np.abs(UR) + _sound_speed(RR, c, cfg.gamma)
    a = np.maximum(lamL, lamR)
    dm = _limited_slope(mg)
    mL = np.clip(mg[lo] + 0.5 * dm[lo], -a * RL, a * RL)
    mR = np.clip(mg[hi] - 0.5 * dm[hi], -a * RR, a * RR)
    F_R = 0.5 * (mL + mR) - 0.5 * a * (RR - RL)
    F_m = (0.5 * (RL * UL**2 + RR * UR**2) + 0.5 * c * (RL**cfg.gamma + RR**cfg.gamma)
           - 0.5 * a * (RR * UR - RL * UL))
    return -(F_R[1:] - F_R[:-1]) / grid.dy, -(F_m[1:] - F_m[:-1]) / grid.dy


def isentropic_step(state: IsentropicState, dsigma: float,
                    check_cfl: bool = True) -> IsentropicState:
    """One SSP-RK2 step; raises CFLViolation or NegativeDensity."""
    if not dsigma > 0:
        raise InvalidParams(f"dsigma must be > 0, got {dsigma}")
    cfg = state.config
    if state.sigma + dsigma > 1.0:
        raise InvalidParams("cannot step past sigma = 1")
    if check_cfl:
        limit = stable_dsigma(state, dsigma)
        if dsigma > limit * (1 + 1e-12):
            raise CFLViolation(f"dsigma = {dsigma:.3e} exceeds the stable step {limit:.3e}")
    if not np.any(state.R > 0):
        return replace(state, sigma=state.sigma + dsigma)
    s0 = state.sigma
    c0 = float(coefficient(cfg, s0))
    c1 = float(coefficient(cfg, min(s0 + dsigma, 1.0 - 1e-15)))
    dR, dm = _rhs(cfg, state.R, state.RU, c0)
    R1, m1 = _clean(state.R + dsigma * dR, state.RU + dsigma * dm)
    dR, dm = _rhs(cfg, R1, m1, c1)
    R2, m2 = _clean(0.5 * (state.R + R1 + dsigma * dR), 0.5 * (state.RU + m1 + dsigma * dm))
    return replace(state, sigma=s0 + dsigma, R=R2, RU=m2)


def _step_with_retries(state, dsigma):
    for _ in range(MAX_HALVINGS + 1):
        try:
            return isentropic_step(state, dsigma, check_cfl=False)
        except NegativeDensity:
            dsigma *= 0.5
    return isentropic_step(state, dsigma, check_cfl=False)


def isentropic_run(initial: IsentropicState, sigma_end: Optional[float] = None,
                   observe_times=None, sink: Optional[Callable] = None,
                   frames_dir=None, cfl: float = CFL) -> IsentropicState:
    """Advance to ``sigma_end`` (default from the config), landing on observation times."""
    cfg = initial.config
    sigma_end = cfg.sigma_end if sigma_end is None else sigma_end
    if not initial.sigma <= sigma_end <= 1.0:
        raise InvalidParams("sigma_end must lie in [sigma, 1]")
    if sigma_end == 1.0 and cfg.exponent < 0:
        raise InvalidParams("sigma_end = 1 is singular for d gamma - d - 2 < 0")
    times = [] if observe_times is None else observe_times
    obs = sorted({float(s) for s in times if initial.sigma < s < sigma_end})
    obs.append(sigma_end)
    if frames_dir is not None:
        os.makedirs(frames_dir, exist_ok=True)

    def observe(st):
        if sink is not None:
            sink(st)
        if frames_dir is not None:
            write_fields(os.path.join(frames_dir, frame_name(st.sigma)), st.y, st.R, st.RU, st.U)

    state = initial
    observe(state)
    for target in obs:
        while state.sigma < target:
            remaining = target - state.sigma
            ds = stable_dsigma(state, cfl=cfl)
            ds = min(ds, stable_dsigma(state, ds, cfl=cfl))
            last = ds >= remaining * (1 - 1e-12)
            nxt = _step_with_retries(state, remaining if last else ds)
            state = replace(nxt, sigma=target) if last and nxt.sigma >= target * (1 - 1e-15) else nxt
        observe(state)
    return state


def to_compact(x, rho, u, t: float, config: IsentropicConfig) -> IsentropicState:
    """Physical (rho, u) at time t to (R, U) at sigma = t/(1+t).

    ``rho`` and ``u`` are callables of x or samples on increasing ``x``.
    """
    if t < 0:
        raise InvalidParams("t must be >= 0")
    a = 1.0 + t
    y = config.grid.centers
    xs = a * y
    rho_v = np.asarray(rho(xs), float) if callable(rho) else np.interp(xs, x, rho, left=0.0, right=0.0)
    u_v = np.asarray(u(xs), float) if callable(u) else np.interp(xs, x, u, left=0.0, right=0.0)
    R = a**config.d * rho_v
    U = a * u_v - xs
    return IsentropicState(sigma=t / a, R=R, RU=R * U, config=config)


def from_compact(state: IsentropicState):
    """Physical ``(t, x, rho, u)`` on x = (1+t) y."""
    if state.sigma >= 1.0:
        raise InvalidParams("sigma = 1 corresponds to t = infinity")
    t = state.sigma / (1.0 - state.sigma)
    a = 1.0 + t
    x = a * state.y
    return t, x, state.R / a**state.config.d, state.U / a + x / a


def isothermal_horizon(sigma: float) -> float:
    """Physical time t = sigma/(1 - sigma) matched to a compactified time."""
    if not 0.0 <= sigma < 1.0:
        raise InvalidParams("sigma must lie in [0, 1)")
    return sigma / (1.0 - sigma)


@dataclass(frozen=True)
class ContrastResult:
    dist_init: float
    dist_final_isentropic: float
    dist_final_isothermal: float
    isothermal_init: tuple
    isothermal_final: tuple
    exponent: float
    t_isothermal: float

    @property
    def persistence_ratio(self) -> float:
        return self.dist_final_isentropic / self.dist_init if self.dist_init > 0 else float("nan")

    @property
    def attraction_ratios(self) -> tuple:
        return tuple(f / i for f, i in zip(self.isothermal_final, self.isothermal_init))

    def header(self) -> list:
        return ["dist_init", "dist_final_isentropic", "dist_final_isothermal", "isothermal_init_A",
                "isothermal_init_B", "isothermal_final_A", "isothermal_final_B", "exponent",
                "t_isothermal"]

    def row(self) -> list:
        vals = [self.dist_init, self.dist_final_isentropic, self.dist_final_isothermal,
                *self.isothermal_init, *self.isothermal_final, self.exponent, self.t_isothermal]
        return ["%.17g" % v for v in vals]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            w.writerow(self.row())


def _l1(grid, a, b):
    return grid.integrate(np.abs(a - b))


def _l1_to_gamma(grid, R):
    G = np.exp(-grid.centers**2)
    return _l1(grid, R, G * grid.integrate(R) / grid.integrate(G))


def profile_contrast(profile_a, profile_b, config: IsentropicConfig,
                     frames_dir=None) -> ContrastResult:
    """Run both profiles through the isentropic and the isothermal pipelines.

    Profiles are ``(R, U)`` arrays on ``config.grid`` with equal mass and peak
    at most 0.05.  The isothermal runs (kappa from the config, eps = nu = 0)
    take the same arrays as rescaled data and stop at t = sigma_end/(1 - sigma_end).
    """
    grid = config.grid
    (Ra, Ua), (Rb, Ub) = [(np.asarray(R, float), np.asarray(U, float)) for R, U in (profile_a, profile_b)]
    ma, mb = grid.integrate(Ra), grid.integrate(Rb)
    if not np.isclose(ma, mb, rtol=1e-10):
        raise InvalidParams(f"profiles must have equal mass, got {ma} and {mb}")
    if max(Ra.max(), Rb.max()) > MAX_PEAK:
        raise InvalidParams(f"profiles must have peak <= {MAX_PEAK}")

    finals = []
    for tag, (R, U) in (("A", (Ra, Ua)), ("B", (Rb, Ub))):
        sub = None if frames_dir is None else os.path.join(frames_dir, f"isentropic_{tag}")
        st = IsentropicState(0.0, R, R * U, config)
        finals.append(isentropic_run(st, frames_dir=sub).R)

    t_iso = isothermal_horizon(config.sigma_end)
    traj = integrate_tau(TauParams(kappa=config.kappa), t_iso)
    model = Model(law=isothermal(config.kappa))
    init_iso, final_iso = [], []
    for tag, (R, U) in (("A", (Ra, Ua)), ("B", (Rb, Ub))):
        sub = None if frames_dir is None else os.path.join(frames_dir, f"isothermal_{tag}")
        st = FluidState1D(0.0, grid, R, R * U, 1.0, model)
        out = run(st, traj, t_iso, record=lambda s, tr: None, frames_dir=sub)
        init_iso.append(_l1_to_gamma(grid, R))
        final_iso.append(_l1_to_gamma(grid, out.R))

    return ContrastResult(
        dist_init=_l1(grid, Ra, Rb),
        dist_final_isentropic=_l1(grid, finals[0], finals[1]),
        dist_final_isothermal=max(final_iso),
        isothermal_init=tuple(init_iso),
        isothermal_final=tuple(final_iso),
        exponent=config.exponent,
        t_isothermal=t_iso)
