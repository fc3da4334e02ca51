"""Functionals of a rescaled state (R, U) on a 1-D grid.

All integrals use the midpoint rule on cells; derivatives are central
differences (one-sided at the two edge cells).  The reference profile is the
Gaussian Gamma(y) = exp(-y**2), rescaled to the discrete mass of R where a
comparison requires equal masses.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import InvalidRegime
from .pressure import PressureLaw, eval_G, excess_pressure, xlogx
from .rescaled_solver import FluidState1D


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    tau: float
    taudot: float
    mass: float
    I1: float
    I2: float
    second_moment: float
    relative_entropy: float
    pseudo_energy: float
    dissipation: float
    lambda_entropy: float
    lambda_dissipation: float
    MV: float
    ck_lhs: float
    ck_rhs: float
    W1: float
    W2: float
    physical_energy: float

    @classmethod
    def header(cls) -> list:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return ["%.17g" % v for v in astuple(self)]


class DiagnosticsSink:
    """Collects records; optionally appends each one to a CSV file."""

    def __init__(self, path=None):
        self.records = []
        self.path = path
        if path is not None:
            with open(path, "w", newline="") as fh:
                csv.writer(fh).writerow(DiagnosticsRecord.header())

    def __call__(self, record: DiagnosticsRecord) -> None:
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a", newline="") as fh:
                csv.writer(fh).writerow(record.row())

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def _grad(f, dy):
    return np.gradient(f, dy)


def _sqrt_grad_sq(state: FluidState1D):
    """|d_y sqrt(R)|**2 per cell."""
    return _grad(np.sqrt(state.R), state.grid.dy) ** 2


def _log_density(state: FluidState1D):
    """ln R above the vacuum floor and a mask of the cells where it is used."""
    ok = state.R > state.floor
    lnR = np.zeros_like(state.R)
    lnR[ok] = np.log(state.R[ok])
    return lnR, ok


def _grad_log_density(state: FluidState1D):
    """d_y ln R on cells whose stencil stays above the vacuum floor, else 0."""
    lnR, ok = _log_density(state)
    g = _grad(lnR, state.grid.dy)
    good = ok.copy()
    good[1:] &= ok[:-1]
    good[:-1] &= ok[1:]
    return np.where(good, g, 0.0), good


def _kinetic(state, tau, W):
    return state.grid.integrate(state.R * W**2) / (2.0 * tau**2)


def _capillary(state, tau, coeff):
    return coeff * state.grid.integrate(_sqrt_grad_sq(state)) / (2.0 * tau**2)


def _confinement_entropy(state, law):
    y = state.grid.centers
    return law.kappa * state.grid.integrate(state.R * y**2 + xlogx(state.R))


def _pressure_G(state, tau, law):
    if law.is_isothermal:
        return 0.0
    d = state.model.d
    scale = tau**d / state.theta
    return scale * state.grid.integrate(eval_G(law, state.R / scale))


def _excess_dissipation(state, tau, taudot, law):
    if law.is_isothermal:
        return 0.0
    d = state.model.d
    scale = tau**d / state.theta
    return d * taudot / tau * scale * state.grid.integrate(excess_pressure(law, state.R / scale))


def _kinetic_dissipation(state, tau, taudot, W, coeff):
    g = state.grid
    return taudot / tau**3 * (g.integrate(state.R * W**2)
                              + coeff * g.integrate(_sqrt_grad_sq(state)))


def _strain_dissipation(state, tau, W, coeff):
    """coeff/tau**4 int R |d_y W|**2; in 1-D this is int |sqrt(R) d_y W|**2."""
    if coeff == 0:
        return 0.0
    dW = _grad(W, state.grid.dy)
    return coeff / tau**4 * state.grid.integrate(state.R * dW**2)


def pseudo_energy(state: FluidState1D, tau: float, taudot: float, law: PressureLaw = None):
    """Pseudo-energy and its dissipation rate ``(E, D)``."""
    law = state.model.law if law is None else law
    eps, nu = state.model.eps, state.model.nu
    U = state.U
    E = (_kinetic(state, tau, U) + _capillary(state, tau, eps**2)
         + _confinement_entropy(state, law) + _pressure_G(state, tau, law))
    D = (_kinetic_dissipation(state, tau, taudot, U, eps**2)
         + _excess_dissipation(state, tau, taudot, law)
         + _strain_dissipation(state, tau, U, nu))
    return E, D


def effective_velocity(state: FluidState1D, lam: float):
    """W = U + lam d_y ln R, set to 0 in vacuum cells."""
    dlnR, good = _grad_log_density(state)
    W = state.U + lam * dlnR
    return np.where(good, W, 0.0) if lam != 0 else state.U


def lambda_coefficients(eps: float, nu: float, lam: float):
    return 4 * lam**2 - 4 * nu * lam + eps**2, nu - 2 * lam


def lambda_entropy(state: FluidState1D, tau: float, taudot: float,
                   law: PressureLaw = None, lam: float = 0.0):
    """Pseudo lambda-entropy ``(E_lam, D_lam, W_lam)``.

    For lam = 0 the shared terms are computed by the same helpers as
    ``pseudo_energy`` and agree with it bitwise.
    """
    law = state.model.law if law is None else law
    eps, nu = state.model.eps, state.model.nu
    lam1, lam2 = lambda_coefficients(eps, nu, lam)
    W = effective_velocity(state, lam)
    E = (_kinetic(state, tau, W) + _capillary(state, tau, lam1)
         + _confinement_entropy(state, law) + _pressure_G(state, tau, law))
    D = (_kinetic_dissipation(state, tau, taudot, W, lam1)
         + _excess_dissipation(state, tau, taudot, law)
         + _strain_dissipation(state, tau, W, lam2))
    if lam != 0:
        g = state.grid
        grad_sqrt_sq = _sqrt_grad_sq(state)
        D += _strain_dissipation(state, tau, W, lam)
        D += 4 * lam * law.kappa / tau**2 * g.integrate(grad_sqrt_sq)
        if not law.is_isothermal:
            scale = tau**state.model.d / state.theta
            sigma = state.R / scale
            # sigma G''(sigma) = P'(sigma) - P'(0)
            D += 4 * lam / tau**2 * g.integrate(law.excess_slope(sigma) * grad_sqrt_sq)
        if lam1 != 0:
            lnR, _ = _log_density(state)
            d2 = np.zeros_like(lnR)
            d2[1:-1] = (lnR[2:] - 2 * lnR[1:-1] + lnR[:-2]) / g.dy**2
            good = state.R > state.floor
            good[1:-1] &= good[2:] & good[:-2]
            good[[0, -1]] = False
            D += lam * lam1 / (4 * tau**4) * g.integrate(np.where(good, state.R * d2**2, 0.0))
    return E, D, W


def mv_lambda(eps: float, nu: float) -> float:
    """lambda(eps) = (nu - sqrt(nu**2 - eps**2))/2, the root making lambda_1 = 0."""
    if eps > nu:
        raise InvalidRegime(f"eps = {eps} > nu = {nu}: lambda(eps) is not real")
    return 0.5 * (nu - math.sqrt(nu**2 - eps**2))


def phi_mv(z):
    z = np.asarray(z, dtype=float)
    return (1 + z) * np.log1p(z)


def mellet_vasseur(state: FluidState1D, eps: float = None, nu: float = None) -> float:
    """int R phi(|W|**2 + y**2) with W = U + lambda(eps) d_y ln R."""
    eps = state.model.eps if eps is None else eps
    nu = state.model.nu if nu is None else nu
    lam = mv_lambda(eps, nu)
    W = effective_velocity(state, lam)
    y = state.grid.centers
    return state.grid.integrate(state.R * phi_mv(W**2 + y**2))


def moments(state: FluidState1D):
    """``(int RU, int y R, int y**2 R)``."""
    g = state.grid
    y = g.centers
    return g.integrate(state.RU), g.integrate(y * state.R), g.integrate(y**2 * state.R)


def matched_gaussian(state: FluidState1D):
    """Gamma scaled to the discrete mass of R, and its logarithm."""
    y = state.grid.centers
    G = np.exp(-y**2)
    c = state.mass / state.grid.integrate(G)
    return c * G, np.log(c) - y**2


def relative_entropy_and_ck(state: FluidState1D):
    """``(int R ln(R/Gamma'), ||R - Gamma'||_1**2, 2 ||R||_1 int R ln(R/Gamma'))``."""
    g = state.grid
    Gp, lnGp = matched_gaussian(state)
    R = state.R
    pos = R > 0
    integrand = np.zeros_like(R)
    integrand[pos] = R[pos] * (np.log(R[pos]) - lnGp[pos])
    relent = g.integrate(integrand)
    lhs = g.integrate(np.abs(R - Gp)) ** 2
    rhs = 2.0 * g.integrate(np.abs(R)) * relent
    return relent, lhs, rhs


def l1_to_gaussian(state: FluidState1D) -> float:
    Gp, _ = matched_gaussian(state)
    return state.grid.integrate(np.abs(state.R - Gp))


def _inverse_cdf(faces, density, dy):
    """Breakpoints (q, y) of the piecewise-linear inverse CDF."""
    cdf = np.concatenate([[0.0], np.cumsum(density) * dy])
    cdf /= cdf[-1]
    # flat stretches of the CDF (empty cells) would make the inverse ambiguous
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return cdf[keep], faces[keep]


def wasserstein_1d(state: FluidState1D, p: int = 2, reference=None) -> float:
    """W_p between R/int R and Gamma/int Gamma (or ``reference`` on the same grid).

    Both inverse CDFs are piecewise linear in q, so their difference is
    integrated exactly between the merged breakpoints.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    g = state.grid
    ref = np.exp(-g.centers**2) if reference is None else np.asarray(reference, dtype=float)
    qa, ya = _inverse_cdf(g.faces, state.R, g.dy)
    qb, yb = _inverse_cdf(g.faces, ref, g.dy)
    q = np.union1d(qa, qb)
    diff = np.interp(q, qa, ya) - np.interp(q, qb, yb)
    dq = np.diff(q)
    a, b = diff[:-1], diff[1:]
    if p == 2:
        return float(np.sqrt(np.sum(dq * (a * a + a * b + b * b) / 3.0)))
    same = a * b >= 0
    denom = np.where(same, 1.0, np.abs(a) + np.abs(b))
    seg = np.where(same, 0.5 * (np.abs(a) + np.abs(b)), 0.5 * (a * a + b * b) / denom)
    return float(np.sum(dq * seg))


def physical_energy(state: FluidState1D, tau: float, taudot: float,
                    law: PressureLaw = None) -> float:
    """Energy of the physical fields written through (R, U):

    theta/(2 tau**2) int R U**2 + theta taudot**2/2 int R y**2
    + theta taudot/tau int R y U + theta eps**2/(2 tau**2) int |d_y sqrt R|**2
    + theta kappa int R ln R + theta kappa ln(theta/tau**d) int R
    + tau**d int G(theta R / tau**d).
    """
    law = state.model.law if law is None else law
    g = state.grid
    y = g.centers
    R, U, theta = state.R, state.U, state.theta
    d = state.model.d
    E = (theta / (2 * tau**2) * g.integrate(R * U**2)
         + theta * taudot**2 / 2 * g.integrate(R * y**2)
         + theta * taudot / tau * g.integrate(R * y * U)
         + theta * state.model.eps**2 / (2 * tau**2) * g.integrate(_sqrt_grad_sq(state))
         + theta * law.kappa * g.integrate(xlogx(R))
         + theta * law.kappa * math.log(theta / tau**d) * g.integrate(R))
    if not law.is_isothermal:
        E += tau**d * g.integrate(eval_G(law, theta * R / tau**d))
    return E


def physical_energy_direct(x, rho, u, eps: float, law: PressureLaw) -> float:
    """1/2 int rho u**2 + eps**2/2 int |d_x sqrt rho|**2 + int F(rho) on a uniform x grid."""
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    rho = np.asarray(rho, dtype=float)
    kin = 0.5 * np.sum(rho * np.asarray(u) ** 2) * dx
    cap = 0.5 * eps**2 * np.sum(np.gradient(np.sqrt(rho), dx) ** 2) * dx
    F = law.kappa * xlogx(rho)
    if not law.is_isothermal:
        F = F + eval_G(law, rho)
    return kin + cap + float(np.sum(F) * dx)


def make_record(state: FluidState1D, traj, lam: float = None) -> DiagnosticsRecord:
    """Every diagnostic at ``state.t``; the lambda-entropy uses lam = nu by default."""
    tau = float(traj.tau_at(state.t))
    taudot = float(traj.taudot_at(state.t))
    law = state.model.law
    eps, nu = state.model.eps, state.model.nu
    I1, I2, m2 = moments(state)
    relent, lhs, rhs = relative_entropy_and_ck(state)
    E, D = pseudo_energy(state, tau, taudot, law)
    El, Dl, _ = lambda_entropy(state, tau, taudot, law, nu if lam is None else lam)
    MV = mellet_vasseur(state) if eps <= nu else float("nan")
    mass = state.mass
    return DiagnosticsRecord(
        t=state.t, tau=tau, taudot=taudot, mass=mass, I1=I1, I2=I2,
        second_moment=m2, relative_entropy=relent, pseudo_energy=E, dissipation=D,
        lambda_entropy=El, lambda_dissipation=Dl, MV=MV, ck_lhs=lhs, ck_rhs=rhs,
        W1=wasserstein_1d(state, 1), W2=wasserstein_1d(state, 2),
        physical_energy=physical_energy(state, tau, taudot, law))
