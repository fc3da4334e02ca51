"""Finite-volume solver for the rescaled system in one space dimension.

With y = x/tau(t), R = tau**d rho / theta and U = tau u - tau' x, the
unknowns (R, RU) obey

    d_t R + tau**-2 d_y(RU) = 0,
    d_t(RU) + tau**-2 d_y(RU**2) + d_y p(R) + 2 kappa y R
        = eps**2/(2 tau**2) d_y S_K + nu/tau**2 d_y(R d_y U) + nu tau'/tau d_y R,

where p(R) = tau**d/theta P(theta R/tau**d) (so d_y p = P'(theta R/tau**d) d_y R),
kappa = P'(0) and S_K = sqrt(R) d_yy sqrt(R) - (d_y sqrt(R))**2.

Every term except the confinement 2 kappa y R is discretised as a face flux,
so momentum changes only through confinement and the two boundary faces.
Time stepping is SSP-RK2; the hyperbolic part uses the Rusanov flux.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import CFLViolation, InvalidParams, NegativeDensity
from .pressure import PressureLaw, isothermal
from .scaling_ode import TauTrajectory

CFL = 0.4
# explicit caps for the dispersive and parabolic parts, tuned empirically
BOHM_DT_FACTOR = 0.2
VISCOUS_DT_FACTOR = 0.4
VACUUM_FLOOR = 1e-12
NEGATIVE_TOL = 1e-14
GHOSTS = 2
MAX_HALVINGS = 8
RECONSTRUCTIONS = ("central", "muscl", "constant")


@dataclass(frozen=True)
class Grid1D:
    L: float = 10.0
    n: int = 400

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidParams(f"L must be > 0, got {self.L}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 16 and self.n % 2 == 0):
            raise InvalidParams(f"n must be an even integer >= 16, got {self.n}")

    @property
    def dy(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def centers(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.dy

    @property
    def faces(self) -> np.ndarray:
        return -self.L + np.arange(self.n + 1) * self.dy

    def integrate(self, f) -> float:
        """Midpoint rule over the cells."""
        return float(np.sum(f) * self.dy)


@dataclass(frozen=True)
class Model:
    law: PressureLaw = field(default_factory=isothermal)
    eps: float = 0.0
    nu: float = 0.0
    d: int = 1
    wave_speed: str = "local"
    reconstruction: str = "central"

    def __post_init__(self):
        if self.eps < 0 or self.nu < 0:
            raise InvalidParams("eps and nu must be >= 0")
        if self.d != 1:
            raise InvalidParams("the PDE solver is one-dimensional (d = 1)")
        if self.wave_speed not in ("local", "global"):
            raise InvalidParams("wave_speed must be 'local' or 'global'")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise InvalidParams(f"reconstruction must be one of {RECONSTRUCTIONS}")

    @property
    def kappa(self) -> float:
        return self.law.kappa

    def as_dict(self) -> dict:
        return {"kind": self.law.kind, "kappa": self.kappa, "powers": [list(p) for p in self.law.powers],
                "eps": self.eps, "nu": self.nu, "d": self.d, "wave_speed": self.wave_speed,
                "reconstruction": self.reconstruction}


@dataclass(frozen=True)
class FluidState1D:
    t: float
    grid: Grid1D
    R: np.ndarray
    RU: np.ndarray
    theta: float
    model: Model

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        RU = np.asarray(self.RU, dtype=float)
        if R.shape != (self.grid.n,) or RU.shape != (self.grid.n,):
            raise InvalidParams("R and RU must have one value per cell")
        if not self.theta > 0:
            raise InvalidParams("theta must be > 0")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "RU", RU)

    @property
    def y(self) -> np.ndarray:
        return self.grid.centers

    @property
    def floor(self) -> float:
        return VACUUM_FLOOR * float(np.max(self.R)) if self.R.size else 0.0

    @property
    def U(self) -> np.ndarray:
        return velocity(self.R, self.RU, self.floor)

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.R)


def velocity(R, RU, floor):
    """RU/R above the vacuum floor, 0 elsewhere."""
    U = np.zeros_like(R)
    ok = R > floor
    U[ok] = RU[ok] / R[ok]
    return U


def gaussian_mass() -> float:
    return float(np.sqrt(np.pi))


def _traj_values(traj: TauTrajectory, t: float):
    return float(traj.tau_at(t)), float(traj.taudot_at(t))


def _pressure(model: Model, R, tau, theta):
    """p(R) = tau**d/theta P(theta R/tau**d) and P'(theta R/tau**d)."""
    law = model.law
    if law.kind == "isothermal":
        return law.kappa * R, np.full_like(R, law.kappa)
    scale = tau**model.d / theta
    sigma = R / scale
    return scale * law.P(sigma), law.dP(sigma)


def _wave_speed(model, R, U, tau, theta):
    _, dP = _pressure(model, R, tau, theta)
    return np.abs(U) / tau**2 + np.sqrt(np.maximum(dP, 0.0)) / tau


def _limited_slope(q):
    """Monotonized-central slopes (per cell, times dy/2 gives the half jump)."""
    dl = np.zeros_like(q)
    dr = np.zeros_like(q)
    dl[1:] = q[1:] - q[:-1]
    dr[:-1] = q[1:] - q[:-1]
    mc = np.minimum(np.minimum(2 * np.abs(dl), 2 * np.abs(dr)), 0.5 * np.abs(dl + dr))
    return np.where(dl * dr > 0, np.sign(dl) * mc, 0.0)


def _density_slope(R):
    """Central slopes clipped so both face values stay >= 0.

    Unlike a TVD limiter these sum to boundary terms only, which keeps the
    Rusanov dissipation of the mass flux telescoping.
    """
    d = np.zeros_like(R)
    d[1:-1] = 0.5 * (R[2:] - R[:-2])
    return np.clip(d, -2.0 * R, 2.0 * R)


def _face_states(model, Rg, Ug, lo, hi):
    """Face values of R and U; the limiter keeps face U inside the cell range."""
    if model.reconstruction == "constant":
        RL, RR, UL, UR = Rg[lo], Rg[hi], Ug[lo], Ug[hi]
    else:
        dR = _density_slope(Rg) if model.reconstruction == "central" else _limited_slope(Rg)
        dU = _limited_slope(Ug)
        RL, RR = Rg[lo] + 0.5 * dR[lo], Rg[hi] - 0.5 * dR[hi]
        UL, UR = Ug[lo] + 0.5 * dU[lo], Ug[hi] - 0.5 * dU[hi]
    return RL, RR, RL * UL, RR * UR, UL, UR


def _rhs(model: Model, grid: Grid1D, theta: float, R, m, tau, taudot):
    dy = grid.dy
    floor = VACUUM_FLOOR * float(np.max(R))
    Rg = np.pad(R, GHOSTS, mode="edge")
    mg = np.pad(m, GHOSTS, mode="edge")
    Ug = velocity(Rg, mg, floor)

    # faces between padded cells k and k+1 for k = GHOSTS-1 .. GHOSTS+n-1
    lo = slice(GHOSTS - 1, GHOSTS + grid.n)
    hi = slice(GHOSTS, GHOSTS + grid.n + 1)
    RL, RR, mL, mR, UL, UR = _face_states(model, Rg, Ug, lo, hi)
    pL, _ = _pressure(model, RL, tau, theta)
    pR, _ = _pressure(model, RR, tau, theta)
    lamL = _wave_speed(model, RL, UL, tau, theta)
    lamR = _wave_speed(model, RR, UR, tau, theta)
    if model.wave_speed == "global":
        a = float(max(np.max(lamL), np.max(lamR)))
    else:
        a = np.maximum(lamL, lamR)
    inv_tau2 = 1.0 / tau**2

    if model.reconstruction != "constant":
        # conservative face momentum keeps sum(F_R) equal to sum(RU), clipped to
        # |m| <= a tau**2 R so each face state meets the Rusanov positivity bound
        dm = _limited_slope(mg)
        cap = a * tau**2
        mL = np.clip(mg[lo] + 0.5 * dm[lo], -cap * RL, cap * RL)
        mR = np.clip(mg[hi] - 0.5 * dm[hi], -cap * RR, cap * RR)
    F_R = 0.5 * inv_tau2 * (mL + mR) - 0.5 * a * (RR - RL)
    F_m = (0.5 * inv_tau2 * (RL * UL**2 + RR * UR**2) + 0.5 * (pL + pR)
           - 0.5 * a * (RR * UR - RL * UL))

    if model.nu > 0:
        # harmonic mean: R_face <= 2 min(R), so the explicit viscous update of
        # U = RU/R stays bounded next to near-vacuum cells
        Rsum = Rg[lo] + Rg[hi]
        R_face = np.where(Rsum > 0, 2.0 * Rg[lo] * Rg[hi] / np.where(Rsum > 0, Rsum, 1.0), 0.0)
        F_m -= model.nu * inv_tau2 * R_face * (Ug[hi] - Ug[lo]) / dy
        F_m -= model.nu * taudot / tau * 0.5 * Rsum
    if model.eps > 0:
        s = np.sqrt(np.maximum(Rg, 0.0))
        s2 = np.zeros_like(s)
        s2[1:-1] = (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dy**2
        s_face = 0.5 * (s[lo] + s[hi])
        ds_face = (s[hi] - s[lo]) / dy
        s2_face = 0.5 * (s2[lo] + s2[hi])
        S_K = s_face * s2_face - ds_face**2
        F_m -= 0.5 * model.eps**2 * inv_tau2 * S_K

    dR = -(F_R[1:] - F_R[:-1]) / dy
    dm = -(F_m[1:] - F_m[:-1]) / dy - 2.0 * model.kappa * grid.centers * R
    return dR, dm, F_R


def stable_dt(state: FluidState1D, traj: TauTrajectory, t: Optional[float] = None,
              cfl: float = CFL) -> float:
    """Largest admissible step at time ``t`` (default ``state.t``)."""
    t = state.t if t is None else t
    tau, _ = _traj_values(traj, t)
    model = state.model
    dy = state.grid.dy
    lam = _wave_speed(model, state.R, state.U, tau, state.theta)
    lam_max = float(np.max(lam))
    dt = cfl * dy / lam_max if lam_max > 0 else np.inf
    if model.nu > 0:
        dt = min(dt, VISCOUS_DT_FACTOR * dy**2 * tau**2 / (2.0 * model.nu))
    if model.eps > 0:
        dt = min(dt, BOHM_DT_FACTOR * dy**2 * tau**2 / model.eps)
    return float(dt)


def _clean(R, m):
    R_max = float(np.max(R)) if R.size else 0.0
    if R.size and float(np.min(R)) < -NEGATIVE_TOL * max(R_max, 1.0):
        i = int(np.argmin(R))
        raise NegativeDensity(f"R = {R[i]:.3e} in cell {i}")
    R = np.maximum(R, 0.0)
    m = np.where(R > VACUUM_FLOOR * R_max, m, 0.0)
    return R, m


def step(state: FluidState1D, traj: TauTrajectory, dt: float,
         check_cfl: bool = True) -> FluidState1D:
    """One SSP-RK2 step of length ``dt``."""
    if not dt > 0:
        raise InvalidParams(f"dt must be > 0, got {dt}")
    if check_cfl:
        limit = stable_dt(state, traj)
        if dt > limit * (1 + 1e-12):
            raise CFLViolation(f"dt = {dt:.3e} exceeds the stable step {limit:.3e}")
    if not np.any(state.R > 0):
        return replace(state, t=state.t + dt)
    model, grid, theta = state.model, state.grid, state.theta
    t0 = state.t
    tau0, td0 = _traj_values(traj, t0)
    tau1, td1 = _traj_values(traj, t0 + dt)

    dR, dm, _ = _rhs(model, grid, theta, state.R, state.RU, tau0, td0)
    R1, m1 = _clean(state.R + dt * dR, state.RU + dt * dm)
    dR, dm, _ = _rhs(model, grid, theta, R1, m1, tau1, td1)
    R2, m2 = _clean(0.5 * (state.R + R1 + dt * dR), 0.5 * (state.RU + m1 + dt * dm))
    return replace(state, t=t0 + dt, R=R2, RU=m2)


def boundary_flux(state: FluidState1D, traj: TauTrajectory) -> float:
    """Net outward mass flux through y = +-L at the current time."""
    tau, taudot = _traj_values(traj, state.t)
    _, _, F_R = _rhs(state.model, state.grid, state.theta, state.R, state.RU, tau, taudot)
    return float(F_R[-1] - F_R[0])


def to_rescaled(x, rho, u, traj: TauTrajectory, t: float, theta: float,
                grid: Grid1D, model: Model) -> FluidState1D:
    """Physical fields to a rescaled state on ``grid``.

    ``rho`` and ``u`` are either callables of x or samples on the increasing
    abscissae ``x``; samples are resampled by linear interpolation (zero
    outside the sampled range).
    """
    tau, taudot = _traj_values(traj, t)
    y = grid.centers
    xs = tau * y
    if callable(rho):
        rho_v = np.asarray(rho(xs), dtype=float)
    else:
        rho_v = np.interp(xs, x, rho, left=0.0, right=0.0)
    if callable(u):
        u_v = np.asarray(u(xs), dtype=float)
    else:
        u_v = np.interp(xs, x, u, left=0.0, right=0.0)
    R = tau**model.d * rho_v / theta
    U = tau * u_v - taudot * tau * y
    floor = VACUUM_FLOOR * float(np.max(R)) if R.size else 0.0
    RU = np.where(R > floor, R * U, 0.0)
    return FluidState1D(t=float(t), grid=grid, R=R, RU=RU, theta=theta, model=model)


def to_physical(state: FluidState1D, traj: TauTrajectory, x=None):
    """Physical ``(x, rho, u)``; on x = tau*y unless ``x`` is given."""
    tau, taudot = _traj_values(traj, state.t)
    y = state.grid.centers
    rho = state.theta * state.R / tau**state.model.d
    xs = tau * y
    u = state.U / tau + taudot / tau * xs
    if x is None:
        return xs, rho, u
    x = np.asarray(x, dtype=float)
    return (x, np.interp(x, xs, rho, left=0.0, right=0.0),
            np.interp(x, xs, u, left=0.0, right=0.0))


def gaussian_state(grid: Grid1D, model: Model, t: float = 0.0, shift: float = 0.0,
                   width: float = 1.0, amplitude: float = 1.0, theta: float = 1.0) -> FluidState1D:
    """R = amplitude * exp(-((y - shift)/width)**2), U = 0."""
    y = grid.centers
    R = amplitude * np.exp(-((y - shift) / width) ** 2)
    return FluidState1D(t=t, grid=grid, R=R, RU=np.zeros_like(R), theta=theta, model=model)


def write_fields(path, y, R, RU, U) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "R", "RU", "U"])
        for row in zip(y, R, RU, U):
            w.writerow(["%.17g" % v for v in row])


def write_frame(path, state: FluidState1D) -> None:
    write_fields(path, state.grid.centers, state.R, state.RU, state.U)


def frame_name(t: float) -> str:
    return "frame_%.9g.csv" % t


def write_metadata(path, state: FluidState1D, traj: TauTrajectory, **extra) -> None:
    meta = {
        "model": state.model.as_dict(),
        "grid": {"L": state.grid.L, "n": state.grid.n},
        "theta": state.theta,
        "tau": {"alpha": traj.params.alpha, "beta": traj.params.beta,
                "kappa": traj.params.kappa, "eps": traj.params.eps, "nu": traj.params.nu},
        "cfl": CFL,
        "vacuum_floor": VACUUM_FLOOR,
    }
    meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def observation_times(t0: float, t_end: float, observe_every=None, observe_times=None):
    if observe_times is not None:
        obs = sorted(float(t) for t in observe_times if t0 <= t <= t_end)
    elif observe_every is not None:
        if not observe_every > 0:
            raise InvalidParams("observe_every must be > 0")
        k = int(np.floor((t_end - t0) / observe_every + 1e-9))
        obs = [t0 + i * observe_every for i in range(k + 1)]
    else:
        obs = [t0]
    if not obs or obs[0] > t0:
        obs.insert(0, t0)
    if obs[-1] < t_end:
        obs.append(t_end)
    return obs


def run(initial: FluidState1D, traj: TauTrajectory, t_end: float,
        observe_every: Optional[float] = None, sink: Optional[Callable] = None,
        observe_times=None, frames_dir=None, record: Optional[Callable] = None,
        cfl: float = CFL) -> FluidState1D:
    """Advance to ``t_end`` with stable steps, landing exactly on observation times.

    At each observation ``sink(record(state, traj))`` is called; ``record``
    defaults to the full diagnostics record.  Frames are written to
    ``frames_dir`` when given.
    """
    if t_end < initial.t:
        raise InvalidParams("t_end must be >= the initial time")
    if t_end > traj.t_end:
        raise InvalidParams(f"trajectory ends at {traj.t_end}, before t_end = {t_end}")
    if record is None:
        from .diagnostics import make_record
        record = make_record
    if frames_dir is not None:
        os.makedirs(frames_dir, exist_ok=True)

    def observe(s):
        if sink is not None:
            sink(record(s, traj))
        if frames_dir is not None:
            write_frame(os.path.join(frames_dir, frame_name(s.t)), s)

    obs = observation_times(initial.t, t_end, observe_every, observe_times)
    state = initial
    observe(state)
    for target in obs[1:]:
        while state.t < target:
            dt = stable_dt(state, traj, cfl=cfl)
            remaining = target - state.t
            last = dt >= remaining * (1 - 1e-12)
            if last:
                dt = remaining
            nxt = _step_with_retries(state, traj, dt)
            state = replace(nxt, t=target) if nxt.t >= target * (1 - 1e-15) and last else nxt
        observe(state)
    return state


def _step_with_retries(state, traj, dt):
    """Step of at most ``dt``; halves the step when a stage leaves R < 0.

    The stability bound is evaluated on the starting state only, and the
    intermediate stage can carry faster near-vacuum velocities.
    """
    for _ in range(MAX_HALVINGS + 1):
        try:
            return step(state, traj, dt, check_cfl=False)
        except NegativeDensity:
            dt *= 0.5
    return step(state, traj, dt, check_cfl=False)
