"""Scenario configuration: TOML parsing, defaults and validation.

Grammar (every table optional except where a scenario needs it)::

    scenario = "rescaled-run"          # must match the CLI subcommand if given

    [model]
    kappa = 1.0                        # P'(0) > 0
    eps = 0.0                          # capillarity, >= 0
    nu = 0.0                           # viscosity, >= 0
    d = 1
    wave_speed = "local"               # local | global
    reconstruction = "central"         # central | muscl | constant
    pressure = { kind = "isothermal" } # isothermal-plus-powers (powers = [[k, g]]), exponential
    gamma = 1.5                        # isentropic-contrast only, 1 < gamma <= 1 + 2/d

    [grid]
    L = 10.0
    n = 400
    cfl = 0.4

    [run]
    t_end = 1.0                        # tau-study, gaussian-oracle, rescaled-run
    s_end = 3.0                        # fokker-planck
    sigma_end = 0.99                   # isentropic-contrast
    alpha = 1.0                        # tau-study initial tau
    beta = 0.0                         # tau-study initial tau'

    [initial]
    kind = "profile"                   # profile | gaussian | file
    name = "asymmetric-bump"           # see PROFILES
    mass = 1.7724538509055159          # optional renormalisation of a profile
    peak = 0.05                        # isentropic-contrast bump height
    b0 = 1.0                           # gaussian: rho = b0 exp(-alpha0 x^2) ...
    alpha0 = 2.0
    beta0 = 0.5
    c0 = 0.3
    path = "init.csv"                  # file: columns y,R,RU (relative to the config file)

    [output]
    dir = "out"
    frames = 21                        # number of observation times, >= 2 (81 for rescaled-run)
    spacing = "linear"                 # linear | geometric

    [diagnostics]
    mellet_vasseur = false             # require the MV functional (needs eps <= nu)

    [tolerances]
    # scenario-specific keys, see DEFAULT_TOLERANCES
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InvalidParams, ParseError, ValidationError
from .pressure import from_spec

SCENARIOS = ("tau-study", "gaussian-oracle", "rescaled-run", "fokker-planck",
             "isentropic-contrast")

PROFILES = ("gaussian", "double-bump", "asymmetric-bump", "skewed-bumps", "bump-pair")

HORIZON_KEY = {"tau-study": "t_end", "gaussian-oracle": "t_end", "rescaled-run": "t_end",
               "fokker-planck": "s_end", "isentropic-contrast": "sigma_end"}

DEFAULT_HORIZON = {"tau-study": 1e4, "gaussian-oracle": 1.0, "rescaled-run": 10.0,
                   "fokker-planck": 2.5, "isentropic-contrast": 0.99}

DEFAULT_PROFILE = {"rescaled-run": "asymmetric-bump", "fokker-planck": "skewed-bumps",
                   "isentropic-contrast": "bump-pair"}

# centred differences of the moment law need fine observation spacing
DEFAULT_FRAMES = {"rescaled-run": 81}

DEFAULT_TOLERANCES = {
    "tau-study": {"first_integral_drift": 1e-8, "asymptote_error": 0.25,
                  "asymptote_monotone": False},
    "gaussian-oracle": {"l1_error": 5e-3, "min_ratio": 1.8, "mass_drift": 1e-8},
    "rescaled-run": {"mass_drift": 1e-8, "ck_slack": 1e-12, "energy_slack": 1e-2,
                     "affine_residual": 1e-4, "i1_law_rms": 1e-2,
                     "attraction_ratio": None, "second_moment_rel": None},
    "fokker-planck": {"stationarity_ratio_min": 3.5, "stationarity_ratio_max": 4.5, "rate_rel": 0.1,
                      "mass_drift": 1e-12, "fit_start": 1.0},
    "isentropic-contrast": {"persistence_min": 0.5, "attraction_max": 0.5},
}

_SECTIONS = {
    "model": {"kappa", "eps", "nu", "d", "wave_speed", "reconstruction", "pressure", "gamma"},
    "grid": {"L", "n", "cfl"},
    "run": {"t_end", "s_end", "sigma_end", "alpha", "beta"},
    "initial": {"kind", "name", "mass", "peak", "b0", "alpha0", "beta0", "c0", "path"},
    "output": {"dir", "frames", "spacing"},
    "diagnostics": {"mellet_vasseur"},
    "tolerances": None,
}

FP_MAX_DENSE = 512


@dataclass(frozen=True)
class ModelSpec:
    kappa: float = 1.0
    eps: float = 0.0
    nu: float = 0.0
    d: int = 1
    wave_speed: str = "local"
    reconstruction: str = "central"
    pressure: dict = field(default_factory=lambda: {"kind": "isothermal"})
    gamma: Optional[float] = None

    def law(self):
        spec = dict(self.pressure)
        spec.setdefault("kappa", self.kappa)
        return from_spec(spec)


@dataclass(frozen=True)
class GridSpec:
    L: float = 10.0
    n: int = 400
    cfl: float = 0.4


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "profile"
    name: Optional[str] = None
    mass: Optional[float] = None
    peak: float = 0.05
    b0: float = 1.0
    alpha0: float = 2.0
    beta0: float = 0.5
    c0: float = 0.3
    path: Optional[str] = None


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    frames: int = 21
    spacing: str = "linear"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    model: ModelSpec
    grid: GridSpec
    horizon: float
    alpha: float
    beta: float
    initial: InitialSpec
    output: OutputSpec
    mellet_vasseur: bool
    tolerances: dict
    source: Optional[str] = None

    def with_output_dir(self, path: str) -> "ScenarioConfig":
        from dataclasses import replace
        return replace(self, output=replace(self.output, dir=path))


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


class _Checker:
    def __init__(self):
        self.problems = []

    def add(self, path, msg):
        self.problems.append((path, msg))

    def number(self, table, key, path, default, cond=None, cond_msg=""):
        if key not in table:
            return default
        v = table[key]
        if not _is_number(v):
            self.add(path, f"expected a finite number, got {v!r}")
            return default
        if cond is not None and not cond(v):
            self.add(path, cond_msg)
        return float(v)

    def integer(self, table, key, path, default, cond=None, cond_msg=""):
        if key not in table:
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(path, f"expected an integer, got {v!r}")
            return default
        if cond is not None and not cond(v):
            self.add(path, cond_msg)
        return v

    def choice(self, table, key, path, default, options):
        if key not in table:
            return default
        v = table[key]
        if v not in options:
            self.add(path, f"must be one of {', '.join(options)}; got {v!r}")
            return default
        return v


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def parse_config(path, scenario: Optional[str] = None) -> ScenarioConfig:
    """Read and validate ``path``; ``scenario`` is the CLI subcommand."""
    raw = load_toml(path)
    return build_config(raw, scenario, base_dir=os.path.dirname(os.path.abspath(path)),
                        source=str(path))


def build_config(raw: dict, scenario: Optional[str] = None, base_dir: str = ".",
                 source: Optional[str] = None) -> ScenarioConfig:
    declared = raw.get("scenario")
    if scenario is None:
        scenario = declared
    if scenario not in SCENARIOS:
        raise ParseError(f"scenario: unknown scenario kind {scenario!r}; "
                         f"expected one of {', '.join(SCENARIOS)}")
    ck = _Checker()
    if declared is not None and declared != scenario:
        ck.add("scenario", f"config declares {declared!r} but {scenario!r} was requested")

    for key, value in raw.items():
        if key == "scenario":
            continue
        if key not in _SECTIONS:
            ck.add(key, "unknown key")
        elif not isinstance(value, dict):
            ck.add(key, "expected a table")
        elif _SECTIONS[key] is not None:
            for sub in value:
                if sub not in _SECTIONS[key]:
                    ck.add(f"{key}.{sub}", "unknown key")

    def table(name):
        t = raw.get(name, {})
        return t if isinstance(t, dict) else {}

    m = table("model")
    kappa = ck.number(m, "kappa", "model.kappa", 1.0, lambda v: v > 0, "must be > 0")
    eps = ck.number(m, "eps", "model.eps", 0.0, lambda v: v >= 0, "must be >= 0")
    nu = ck.number(m, "nu", "model.nu", 0.0, lambda v: v >= 0, "must be >= 0")
    d = ck.integer(m, "d", "model.d", 1, lambda v: v >= 1, "must be >= 1")
    if scenario != "tau-study" and d != 1:
        ck.add("model.d", "the PDE solvers are one-dimensional; d must be 1")
    wave_speed = ck.choice(m, "wave_speed", "model.wave_speed", "local", ("local", "global"))
    reconstruction = ck.choice(m, "reconstruction", "model.reconstruction", "central",
                               ("central", "muscl", "constant"))
    pressure = m.get("pressure", {"kind": "isothermal"})
    if not isinstance(pressure, dict):
        ck.add("model.pressure", "expected a table")
        pressure = {"kind": "isothermal"}
    else:
        pressure = dict(pressure)
        if "kappa" in pressure and _is_number(pressure["kappa"]) and pressure["kappa"] != kappa:
            ck.add("model.pressure.kappa", "conflicts with model.kappa")
        pressure.pop("kappa", None)
        try:
            from_spec({**pressure, "kappa": kappa if kappa > 0 else 1.0})
        except (InvalidParams, TypeError, ValueError) as exc:
            ck.add("model.pressure", str(exc))
    gamma = None
    if scenario == "isentropic-contrast":
        gamma = ck.number(m, "gamma", "model.gamma", 1.5)
        if not 1.0 < gamma <= 1.0 + 2.0 / max(d, 1):
            ck.add("model.gamma", "must satisfy 1 < gamma <= 1 + 2/d")
    elif "gamma" in m:
        ck.add("model.gamma", "only used by isentropic-contrast")
    model = ModelSpec(kappa=kappa, eps=eps, nu=nu, d=d, wave_speed=wave_speed,
                      reconstruction=reconstruction, pressure=pressure, gamma=gamma)

    g = table("grid")
    L = ck.number(g, "L", "grid.L", 10.0, lambda v: v > 0, "must be > 0")
    n = ck.integer(g, "n", "grid.n", 400, lambda v: v >= 16 and v % 2 == 0,
                   "must be an even integer >= 16")
    cfl = ck.number(g, "cfl", "grid.cfl", 0.4, lambda v: 0 < v <= 1, "must lie in (0, 1]")
    grid = GridSpec(L=L, n=n, cfl=cfl)

    r = table("run")
    hkey = HORIZON_KEY[scenario]
    for key in ("t_end", "s_end", "sigma_end"):
        if key in r and key != hkey:
            ck.add(f"run.{key}", f"not used by {scenario}; use run.{hkey}")
    horizon = ck.number(r, hkey, f"run.{hkey}", DEFAULT_HORIZON[scenario],
                        lambda v: v > 0, "must be > 0")
    if scenario == "isentropic-contrast" and not horizon < 1.0:
        ck.add("run.sigma_end", "must be < 1 (the pressure coefficient is singular at sigma = 1)")
    alpha = ck.number(r, "alpha", "run.alpha", 1.0, lambda v: v > 0, "must be > 0")
    beta = ck.number(r, "beta", "run.beta", 0.0)
    if scenario != "tau-study":
        for key in ("alpha", "beta"):
            if key in r:
                ck.add(f"run.{key}", "only used by tau-study")

    i = table("initial")
    default_kind = "gaussian" if scenario == "gaussian-oracle" else "profile"
    kind = ck.choice(i, "kind", "initial.kind", default_kind, ("profile", "gaussian", "file"))
    if scenario == "gaussian-oracle" and kind != "gaussian":
        ck.add("initial.kind", "gaussian-oracle needs gaussian initial data")
    if scenario == "isentropic-contrast" and kind != "profile":
        ck.add("initial.kind", "isentropic-contrast uses the bump-pair profile")
    name = ck.choice(i, "name", "initial.name", DEFAULT_PROFILE.get(scenario), PROFILES)
    if kind == "profile" and scenario not in ("tau-study", "gaussian-oracle"):
        if name is None:
            ck.add("initial.name", "a profile name is required")
        elif (name == "bump-pair") != (scenario == "isentropic-contrast"):
            ck.add("initial.name", "bump-pair is the isentropic-contrast profile and only that")
    mass = ck.number(i, "mass", "initial.mass", None, lambda v: v > 0, "must be > 0")
    peak = ck.number(i, "peak", "initial.peak", 0.05, lambda v: 0 < v <= 0.05,
                     "must lie in (0, 0.05]")
    b0 = ck.number(i, "b0", "initial.b0", 1.0, lambda v: v > 0, "must be > 0")
    alpha0 = ck.number(i, "alpha0", "initial.alpha0", 2.0, lambda v: v > 0, "must be > 0")
    beta0 = ck.number(i, "beta0", "initial.beta0", 0.5)
    c0 = ck.number(i, "c0", "initial.c0", 0.3)
    path = i.get("path")
    if kind == "file":
        if scenario == "tau-study":
            ck.add("initial.kind", "tau-study takes no field data")
        if not isinstance(path, str):
            ck.add("initial.path", "a CSV path is required for file initial data")
        else:
            path = path if os.path.isabs(path) else os.path.join(base_dir, path)
            if not os.path.isfile(path):
                ck.add("initial.path", f"no such file: {path}")
    initial = InitialSpec(kind=kind, name=name, mass=mass, peak=peak, b0=b0, alpha0=alpha0,
                          beta0=beta0, c0=c0, path=path)

    o = table("output")
    out_dir = o.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        ck.add("output.dir", "expected a non-empty string")
        out_dir = "out"
    frames = ck.integer(o, "frames", "output.frames", DEFAULT_FRAMES.get(scenario, 21),
                        lambda v: v >= 2, "must be >= 2")
    spacing = ck.choice(o, "spacing", "output.spacing", "linear", ("linear", "geometric"))
    output = OutputSpec(dir=out_dir, frames=frames, spacing=spacing)

    dg = table("diagnostics")
    mv = dg.get("mellet_vasseur", False)
    if not isinstance(mv, bool):
        ck.add("diagnostics.mellet_vasseur", "expected true or false")
        mv = False
    if mv and eps > nu:
        ck.add("model.eps", f"Mellet-Vasseur diagnostics need 0 <= eps <= nu; got eps = {eps} > "
                            f"nu = {nu}")

    tol = dict(DEFAULT_TOLERANCES[scenario])
    for key, value in table("tolerances").items():
        if key not in tol:
            ck.add(f"tolerances.{key}", f"unknown tolerance for {scenario}")
        elif isinstance(tol[key], bool) or (tol[key] is None and isinstance(value, bool)):
            if not isinstance(value, bool):
                ck.add(f"tolerances.{key}", "expected true or false")
            else:
                tol[key] = value
        elif not _is_number(value) or value < 0:
            ck.add(f"tolerances.{key}", "expected a non-negative number")
        else:
            tol[key] = float(value)

    if scenario == "fokker-planck":
        if n > FP_MAX_DENSE:
            ck.add("grid.n", f"the dense eigen-oracle needs n <= {FP_MAX_DENSE}")
        if L * 2 * L / n >= 1:
            ck.add("grid.n", "Fokker-Planck positivity needs L * dy < 1")
        if tol["fit_start"] >= horizon:
            ck.add("tolerances.fit_start", "must be before run.s_end")
        if eps or nu:
            ck.add("model", "fokker-planck has no eps or nu")
    if scenario == "isentropic-contrast" and (eps or nu):
        ck.add("model", "isentropic-contrast has no eps or nu")
    if scenario in ("gaussian-oracle",) and pressure.get("kind", "isothermal") != "isothermal":
        ck.add("model.pressure.kind", "the Gaussian oracle is exact for isothermal pressure only")
    if scenario == "gaussian-oracle" and 2 * n > 4096:
        ck.add("grid.n", "the refinement study runs n and 2n; keep 2n <= 4096")

    if ck.problems:
        raise ValidationError(ck.problems)
    return ScenarioConfig(scenario=scenario, model=model, grid=grid, horizon=horizon,
                          alpha=alpha, beta=beta, initial=initial, output=output,
                          mellet_vasseur=mv, tolerances=tol, source=source)
