"""Scaling function tau(t) of the self-similar change of variables.

The generic equation is

    tau'' = 2*kappa/tau + eps**2/tau**3 - nu*tau'/tau**2,
    tau(0) = alpha, tau'(0) = beta,

which reduces to tau'' = 2*kappa/tau when eps = nu = 0.  The accumulated
dissipation Q(t) = int_0^t (tau'/tau)**2 ds is carried as a third unknown so
that the first integral

    tau'**2 - 4*kappa*ln(tau) + eps**2/tau**2 + 2*nu*Q

is available with the same error control as tau itself.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, InvalidParams, NotYetMonotone, StepFailure

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-12


@dataclass(frozen=True)
class TauParams:
    alpha: float = 1.0
    beta: float = 0.0
    kappa: float = 1.0
    eps: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParams(f"alpha must be > 0, got {self.alpha}")
        if not self.kappa > 0:
            raise InvalidParams(f"kappa must be > 0, got {self.kappa}")
        if self.eps < 0 or self.nu < 0:
            raise InvalidParams("eps and nu must be >= 0")

    def acceleration(self, tau, taudot):
        return (2.0 * self.kappa / tau + self.eps**2 / tau**3
                - self.nu * taudot / tau**2)

    @property
    def first_integral_value(self) -> float:
        """Value of the conserved quantity fixed by the initial data."""
        return (self.beta**2 - 4.0 * self.kappa * np.log(self.alpha)
                + self.eps**2 / self.alpha**2)


def _hermite(t, t0, t1, y0, y1, d0, d1):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


@dataclass(frozen=True)
class TauTrajectory:
    """Accepted steps of an integration of the scaling ODE.

    Queries between samples use cubic Hermite interpolation built from the
    stored values and their exact derivatives.
    """

    times: np.ndarray
    tau: np.ndarray
    taudot: np.ndarray
    Q: np.ndarray
    params: TauParams
    tauddot: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        n = len(self.times)
        if n < 2 or not (len(self.tau) == len(self.taudot) == len(self.Q) == n):
            raise InvalidParams("trajectory arrays must have equal length >= 2")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidParams("trajectory times must be strictly increasing")
        if self.tauddot is None:
            object.__setattr__(self, "tauddot",
                               self.params.acceleration(self.tau, self.taudot))
        for name in ("times", "tau", "taudot", "Q", "tauddot"):
            getattr(self, name).setflags(write=False)

    def __len__(self):
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise DomainError(
                f"t outside trajectory range [{self.times[0]}, {self.times[-1]}]")
        i = np.searchsorted(self.times, t, side="right") - 1
        return t, np.clip(i, 0, len(self.times) - 2)

    def tau_at(self, t):
        t, i = self._locate(t)
        return _hermite(t, self.times[i], self.times[i + 1], self.tau[i],
                        self.tau[i + 1], self.taudot[i], self.taudot[i + 1])

    def taudot_at(self, t):
        t, i = self._locate(t)
        return _hermite(t, self.times[i], self.times[i + 1], self.taudot[i],
                        self.taudot[i + 1], self.tauddot[i], self.tauddot[i + 1])

    def Q_at(self, t):
        t, i = self._locate(t)
        q0 = (self.taudot[i] / self.tau[i]) ** 2
        q1 = (self.taudot[i + 1] / self.tau[i + 1]) ** 2
        return _hermite(t, self.times[i], self.times[i + 1], self.Q[i],
                        self.Q[i + 1], q0, q1)

    def __call__(self, t):
        """Return ``(tau(t), taudot(t))``."""
        return self.tau_at(t), self.taudot_at(t)

    def first_positive_time(self) -> float:
        """Time after which the sampled tau' stays positive."""
        nonpos = np.flatnonzero(self.taudot <= 0)
        if len(nonpos) == 0:
            return float(self.times[0])
        k = nonpos[-1]
        if k == len(self.times) - 1:
            raise NotYetMonotone("tau' is not positive at the end of the trajectory")
        return float(self.times[k + 1])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "tau", "taudot", "Q"])
            for row in zip(self.times, self.tau, self.taudot, self.Q):
                w.writerow([repr(float(v)) for v in row])


def integrate_tau(params: TauParams, t_end: float,
                  rel_tol: float = DEFAULT_REL_TOL,
                  abs_tol: float = DEFAULT_ABS_TOL) -> TauTrajectory:
    """Integrate the scaling ODE on ``[0, t_end]`` with an embedded RK 5(4) pair.

    Every accepted step is kept, so the returned trajectory can be queried
    anywhere in the interval.
    """
    if not t_end > 0:
        raise InvalidParams(f"t_end must be > 0, got {t_end}")
    if not 0 < rel_tol <= 1e-2:
        raise InvalidParams(f"rel_tol must lie in (0, 1e-2], got {rel_tol}")

    kappa2 = 2.0 * params.kappa
    eps2 = params.eps**2
    nu = params.nu

    def rhs(t, y):
        tau, v = y[0], y[1]
        return [v, kappa2 / tau + eps2 / tau**3 - nu * v / tau**2, (v / tau) ** 2]

    def hits_zero(t, y):
        return y[0]

    hits_zero.terminal = True
    hits_zero.direction = -1

    sol = solve_ivp(rhs, (0.0, float(t_end)), [params.alpha, params.beta, 0.0],
                    method="RK45", rtol=rel_tol, atol=abs_tol, events=hits_zero)
    if sol.status == -1:
        raise StepFailure(f"integrator failed: {sol.message}")
    if sol.status == 1 or np.any(sol.y[0] <= 0):
        raise StepFailure(f"tau reached zero at t={sol.t[-1]}")
    return TauTrajectory(times=sol.t, tau=sol.y[0], taudot=sol.y[1],
                         Q=sol.y[2], params=params)


def first_integral(traj: TauTrajectory, index):
    """tau'**2 - 4 kappa ln tau + eps**2/tau**2 + 2 nu Q at sample ``index``.

    Equals ``traj.params.first_integral_value`` up to integration error.
    """
    p = traj.params
    n = len(traj)
    idx = np.asarray(index)
    if np.any(idx >= n) or np.any(idx < -n):
        raise IndexError(f"sample index {index} out of range for {n} samples")
    tau = traj.tau[idx]
    v = traj.taudot[idx]
    return (v**2 - 4.0 * p.kappa * np.log(tau) + p.eps**2 / tau**2
            + 2.0 * p.nu * traj.Q[idx])


def tau_asymptote(kappa: float, t):
    """Leading-order large-time behaviour ``(2 t sqrt(kappa ln t), 2 sqrt(kappa ln t))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= np.e):
        raise DomainError("the asymptotic formula needs t > e")
    root = np.sqrt(kappa * np.log(t))
    tau = 2.0 * t * root
    taudot = 2.0 * root
    if tau.ndim == 0:
        return float(tau), float(taudot)
    return tau, taudot


def asymptote_remainder(t):
    """ln(ln t)/ln t, the size of the relative correction to the asymptote."""
    t = np.asarray(t, dtype=float)
    return np.log(np.log(t)) / np.log(t)


def s_of_t(traj: TauTrajectory, t):
    """Logarithmic time s = ln(tau'(t)) / 2."""
    v = traj.taudot_at(t)
    if np.any(v <= 0):
        raise NotYetMonotone(f"tau'(t) = {v} is not positive at t = {t}")
    s = 0.5 * np.log(v)
    return float(s) if np.ndim(s) == 0 else s
