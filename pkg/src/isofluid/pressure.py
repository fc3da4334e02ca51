"""Convex pressure laws with P'(0) > 0 and the functionals G and F.

    G(u) = int_0^u int_0^v (P'(s) - P'(0))/s ds dv
         = int_0^u (u - s) (P'(s) - P'(0))/s ds

    F(rho) = P'(0) rho ln rho + G(rho)

All laws are normalised so that P(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParams, QuadratureFailure

QUAD_TOL = 1e-10

KINDS = ("isothermal", "isothermal-plus-powers", "exponential", "custom")


@dataclass(frozen=True)
class PressureLaw:
    kind: str
    kappa: float
    P: Callable = field(repr=False)
    dP: Callable = field(repr=False)
    d2P: Callable = field(repr=False)
    powers: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown pressure kind {self.kind!r}")
        if not self.kappa > 0:
            raise InvalidParams(f"P'(0) must be > 0, got {self.kappa}")

    @property
    def is_isothermal(self) -> bool:
        return self.kind == "isothermal"

    def excess_slope(self, sigma):
        """P'(sigma) - P'(0), which also equals sigma * G''(sigma)."""
        return self.dP(sigma) - self.kappa


def isothermal(kappa: float = 1.0) -> PressureLaw:
    return PressureLaw(
        "isothermal", kappa,
        P=lambda r: kappa * np.asarray(r, dtype=float),
        dP=lambda r: np.full_like(np.asarray(r, dtype=float), kappa),
        d2P=lambda r: np.zeros_like(np.asarray(r, dtype=float)))


def isothermal_plus_powers(kappa: float, powers: Sequence) -> PressureLaw:
    """P(rho) = kappa rho + sum_j k_j rho**g_j with k_j > 0, g_j > 1."""
    powers = tuple((float(k), float(g)) for k, g in powers)
    for k, g in powers:
        if not (k > 0 and g > 1):
            raise InvalidParams(f"power term needs k > 0 and gamma > 1, got ({k}, {g})")

    def P(r):
        r = np.asarray(r, dtype=float)
        return kappa * r + sum(k * r**g for k, g in powers)

    def dP(r):
        r = np.asarray(r, dtype=float)
        return kappa + sum(k * g * r ** (g - 1) for k, g in powers)

    def d2P(r):
        r = np.asarray(r, dtype=float)
        return sum(k * g * (g - 1) * r ** (g - 2) for k, g in powers) + 0 * r

    return PressureLaw("isothermal-plus-powers", kappa, P, dP, d2P, powers)


def exponential(kappa: float = 1.0) -> PressureLaw:
    """P(rho) = kappa (e**rho - 1)."""
    return PressureLaw(
        "exponential", kappa,
        P=lambda r: kappa * np.expm1(r),
        dP=lambda r: kappa * np.exp(r),
        d2P=lambda r: kappa * np.exp(r))


def custom(P, dP, d2P) -> PressureLaw:
    kappa = float(dP(0.0))
    return PressureLaw("custom", kappa, P, dP, d2P)


def from_spec(spec: dict) -> PressureLaw:
    """Build a law from ``{kind, kappa, powers}`` as found in scenario configs."""
    kind = spec.get("kind", "isothermal")
    kappa = float(spec.get("kappa", 1.0))
    if kind == "isothermal":
        return isothermal(kappa)
    if kind == "isothermal-plus-powers":
        return isothermal_plus_powers(kappa, spec.get("powers", []))
    if kind == "exponential":
        return exponential(kappa)
    raise InvalidParams(f"pressure kind {kind!r} cannot be built from a config")


def _G_quad(law: PressureLaw, u: float) -> float:
    if u == 0.0:
        return 0.0
    d2P0 = float(law.d2P(0.0))

    def integrand(s):
        if s == 0.0:
            return u * d2P0
        return (u - s) * (float(law.dP(s)) - law.kappa) / s

    val, err, info = quad(integrand, 0.0, u, epsabs=QUAD_TOL, epsrel=1e-12,
                          limit=200, full_output=True)[:3]
    if err > 100 * QUAD_TOL * max(1.0, abs(val)):
        raise QuadratureFailure(f"G({u}): error estimate {err:.3g} too large")
    return val


def eval_G(law: PressureLaw, u):
    """G(u) >= 0; closed form for isothermal and power laws, quadrature otherwise."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise InvalidParams("G is defined for u >= 0")
    if law.kind == "isothermal":
        out = np.zeros_like(u)
    elif law.kind == "isothermal-plus-powers":
        out = sum(k * u**g / (g - 1) for k, g in law.powers) + 0 * u
    else:
        out = np.vectorize(lambda v: _G_quad(law, float(v)), otypes=[float])(u)
    return float(out) if out.ndim == 0 else out


def xlogx(x):
    """x ln x, extended by 0 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return float(out) if out.ndim == 0 else out


def eval_F(law: PressureLaw, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise InvalidParams("F is defined for rho >= 0")
    out = law.kappa * xlogx(rho) + eval_G(law, rho)
    return float(out) if np.ndim(out) == 0 else out


def excess_pressure(law: PressureLaw, sigma):
    """P(sigma) - sigma P'(0), non-negative by convexity."""
    sigma = np.asarray(sigma, dtype=float)
    if law.kind == "isothermal":
        out = np.zeros_like(sigma)
    else:
        out = law.P(sigma) - law.kappa * sigma
    return float(out) if np.ndim(out) == 0 else out
