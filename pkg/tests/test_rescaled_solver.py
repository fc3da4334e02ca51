import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isofluid.errors import CFLViolation, InvalidParams, NegativeDensity
from isofluid.gaussian_explicit import GaussianParams, density_at, evolve_gaussian, velocity_at
from isofluid.pressure import exponential, isothermal, isothermal_plus_powers
from isofluid.rescaled_solver import (
    FluidState1D, Grid1D, Model, frame_name, gaussian_state, run, stable_dt, step, to_physical,
    to_rescaled, write_frame, write_metadata)
from isofluid.scaling_ode import TauParams, integrate_tau


@pytest.fixture(scope="module")
def traj():
    return integrate_tau(TauParams(kappa=1.0), 20.0)


def no_record(state, traj):
    return None


def bump_state(grid, model=None):
    y = grid.centers
    R = np.exp(-(y - 1) ** 2) + 0.5 * np.exp(-(y + 1.5) ** 2 / 0.5)
    RU = 0.3 * np.exp(-(y - 1) ** 2)
    return FluidState1D(0.0, grid, R, RU, 1.0, model or Model())


def gaussian_fields(state):
    return (lambda x: density_at(state, x[:, None]),
            lambda x: velocity_at(state, x[:, None])[:, 0])


@pytest.mark.parametrize("L,n", [(0.0, 100), (10.0, 15), (10.0, 101), (10.0, 100.0)])
def test_grid_validation(L, n):
    with pytest.raises(InvalidParams):
        Grid1D(L, n)


def test_grid_geometry():
    g = Grid1D(5.0, 20)
    assert g.dy == 0.5
    assert g.centers[0] == -4.75
    assert g.faces[-1] == 5.0
    assert g.integrate(np.ones(20)) == 10.0


def test_model_validation():
    with pytest.raises(InvalidParams):
        Model(eps=-1.0)
    with pytest.raises(InvalidParams):
        Model(d=2)
    with pytest.raises(InvalidParams):
        Model(wave_speed="fast")
    with pytest.raises(InvalidParams):
        Model(reconstruction="weno")


def test_to_physical_at_t0_is_identity(traj):
    g = Grid1D(10.0, 64)
    s = gaussian_state(g, Model(), amplitude=2.0)
    x, rho, u = to_physical(s, traj)
    np.testing.assert_array_equal(x, g.centers)
    np.testing.assert_array_equal(rho, s.R)
    np.testing.assert_array_equal(u, 0.0)


def test_static_gaussian_transforms_to_gamma():
    # self-similar physical Gaussian of mass sqrt(pi): R = Gamma, U = 0
    tr = integrate_tau(TauParams(), 5.0)
    t = 1.3
    tau, taudot = float(tr.tau_at(t)), float(tr.taudot_at(t))
    g = Grid1D(10.0, 128)
    s = to_rescaled(None, lambda x: np.exp(-(x / tau) ** 2) / tau,
                    lambda x: taudot / tau * x, tr, t, 1.0, g, Model())
    np.testing.assert_allclose(s.R, np.exp(-g.centers**2), rtol=1e-13, atol=1e-300)
    np.testing.assert_allclose(s.U, 0.0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.0, 15.0), theta=st.floats(0.1, 10.0))
def test_round_trip(traj, t, theta):
    g = Grid1D(8.0, 64)
    tau = float(traj.tau_at(t))
    rho = lambda x: 1.0 + np.exp(-(x / tau) ** 2)
    u = lambda x: np.sin(x / tau)
    s = to_rescaled(None, rho, u, traj, t, theta, g, Model())
    x, rho_b, u_b = to_physical(s, traj)
    np.testing.assert_allclose(rho_b, rho(x), rtol=1e-12)
    np.testing.assert_allclose(u_b, u(x), rtol=1e-10, atol=1e-12)


def test_sampled_input_interpolates(traj):
    g = Grid1D(4.0, 32)
    x = np.linspace(-20, 20, 4001)
    s = to_rescaled(x, np.exp(-x**2), np.zeros_like(x), traj, 0.0, 1.0, g, Model())
    np.testing.assert_allclose(s.R, np.exp(-g.centers**2), atol=1e-4)


def test_uniform_density_feels_only_confinement(traj):
    g = Grid1D(10.0, 64)
    s = FluidState1D(0.0, g, np.ones(64), np.zeros(64), 1.0, Model())
    dt = 1e-3
    out = step(s, traj, dt)
    interior = slice(4, -4)
    # the second stage sees R = 1 + 2 dt**2 after the first compression
    np.testing.assert_allclose(out.RU[interior], -2.0 * g.centers[interior] * dt, rtol=5e-6)
    np.testing.assert_allclose(out.R[interior], 1.0, atol=1e-5)


def test_vacuum_is_fixed_point(traj):
    g = Grid1D(10.0, 32)
    s = FluidState1D(0.0, g, np.zeros(32), np.zeros(32), 1.0, Model())
    out = step(s, traj, 0.1)
    assert out.t == 0.1
    assert np.all(out.R == 0) and np.all(out.RU == 0)


def test_cfl_violation(traj):
    s = gaussian_state(Grid1D(10.0, 100), Model())
    with pytest.raises(CFLViolation):
        step(s, traj, 2 * stable_dt(s, traj))


def test_stable_dt_scaling(traj):
    coarse = gaussian_state(Grid1D(10.0, 100), Model())
    fine = gaussian_state(Grid1D(10.0, 200), Model())
    assert stable_dt(fine, traj) == pytest.approx(stable_dt(coarse, traj) / 2, rel=0.05)
    kort = Model(eps=1.0)
    c = stable_dt(gaussian_state(Grid1D(10.0, 100), kort), traj)
    f = stable_dt(gaussian_state(Grid1D(10.0, 200), kort), traj)
    assert f == pytest.approx(c / 4, rel=1e-12)


def test_negative_density_detected(traj):
    g = Grid1D(10.0, 32)
    R = np.zeros(32)
    R[16] = 1.0
    RU = np.zeros(32)
    RU[16] = 50.0
    s = FluidState1D(0.0, g, R, RU, 1.0, Model(reconstruction="constant"))
    with pytest.raises(NegativeDensity):
        step(s, traj, 0.5, check_cfl=False)


@pytest.mark.parametrize("model", [Model(), Model(wave_speed="global"), Model(eps=0.5, nu=0.5),
                                   Model(law=exponential(1.0)),
                                   Model(law=isothermal_plus_powers(1.0, [(1.0, 2.0)]))],
                         ids=["euler", "global", "qns", "exponential", "powers"])
def test_mass_drift(traj, model):
    s = bump_state(Grid1D(10.0, 200), model)
    out = run(s, traj, 2.0, record=no_record)
    assert out.t == 2.0
    assert abs(out.mass / s.mass - 1) < 1e-8
    assert np.all(out.R >= 0)


def test_observations_land_on_times(traj):
    s = bump_state(Grid1D(10.0, 64))
    seen = []
    run(s, traj, 1.0, observe_every=0.25, sink=seen.append, record=lambda st, tr: st.t)
    assert seen == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_run_rejects_bad_horizon(traj):
    s = bump_state(Grid1D(10.0, 64))
    with pytest.raises(InvalidParams):
        run(s, traj, 50.0, record=no_record)


@pytest.mark.parametrize("eps,nu", [(0.0, 0.0), (1.0, 0.0), (0.5, 0.5)],
                         ids=["euler", "korteweg", "qns"])
def test_converges_to_gaussian_solution(eps, nu):
    # the explicit Gaussian solution of the same system is the reference
    gp = GaussianParams(d=1, b0=1.0, alpha0=2.0, beta0=0.5, c0=0.3, eps=eps, nu=nu)
    theta = gp.mass / np.sqrt(np.pi)
    tr = integrate_tau(TauParams(), 1.0)
    g0, g1 = evolve_gaussian(gp, 0.0), evolve_gaussian(gp, 1.0)
    errs = []
    for n in (200, 400):
        g = Grid1D(10.0, n)
        m = Model(eps=eps, nu=nu)
        s = to_rescaled(None, *gaussian_fields(g0), tr, 0.0, theta, g, m)
        out = run(s, tr, 1.0, record=no_record)
        ref = to_rescaled(None, *gaussian_fields(g1), tr, 1.0, theta, g, m)
        errs.append(g.integrate(np.abs(out.R - ref.R)) / ref.mass)
    assert errs[1] < 5e-3
    assert errs[0] / errs[1] > 3.0


def test_frames_and_metadata(tmp_path, traj):
    s = bump_state(Grid1D(10.0, 32))
    run(s, traj, 0.5, observe_every=0.25, record=no_record, frames_dir=tmp_path / "frames")
    names = {p.name for p in (tmp_path / "frames").iterdir()}
    assert names == {frame_name(0.0), frame_name(0.25), frame_name(0.5)}
    lines = (tmp_path / "frames" / frame_name(0.0)).read_text().splitlines()
    assert lines[0] == "y,R,RU,U"
    assert len(lines) == 33
    assert float(lines[1].split(",")[1]) == s.R[0]
    write_metadata(tmp_path / "meta.json", s, traj, note="x")
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["grid"] == {"L": 10.0, "n": 32}
    assert meta["note"] == "x"


def test_frame_is_deterministic(tmp_path):
    s = bump_state(Grid1D(10.0, 32))
    write_frame(tmp_path / "a.csv", s)
    write_frame(tmp_path / "b.csv", s)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_compact_support_stays_nonnegative(traj):
    g = Grid1D(10.0, 200)
    y = g.centers
    R = np.clip(1 - y**2, 0, None)
    s = FluidState1D(0.0, g, R, np.zeros_like(R), 1.0, Model(law=isothermal(1.0)))
    out = run(s, traj, 1.0, record=no_record)
    assert np.all(out.R >= 0)
    assert out.mass == pytest.approx(s.mass, rel=1e-10)
