import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isofluid.errors import InvalidParams, StabilityViolation
from isofluid.fokker_planck import (
    FPState, discrete_equilibrium, fit_decay_rate, fp_matrix, fp_record, fp_relax, fp_rhs,
    fp_step, max_stable_ds, spectral_gap, stationarity_residual)
from isofluid.rescaled_solver import Grid1D


def asymmetric_bumps(grid):
    y = grid.centers
    return np.exp(-(y - 1) ** 2 / 0.5) + 0.5 * np.exp(-(y + 1.5) ** 2 / 0.3)


def test_gamma_stationary_to_second_order():
    r = [stationarity_residual(Grid1D(10.0, n)) for n in (100, 200, 400)]
    assert r[2] < 2e-3
    assert 3.8 < r[0] / r[1] < 4.2
    assert 3.8 < r[1] / r[2] < 4.2


@pytest.mark.parametrize("n", [64, 128, 256])
def test_spectrum_matches_continuum(n):
    ev = np.sort(np.linalg.eigvals(fp_matrix(Grid1D(8.0, n))).real)[::-1]
    assert abs(ev[0]) < 1e-10
    np.testing.assert_allclose(ev[1:4], [-2.0, -4.0, -6.0], rtol=2e-2)
    assert np.all(ev <= 1e-10)


def test_spectral_gap():
    assert spectral_gap(Grid1D(8.0, 256)) == pytest.approx(2.0, rel=1e-3)


def test_dense_size_limit():
    with pytest.raises(InvalidParams):
        fp_matrix(Grid1D(10.0, 1024))


def test_stability_violation():
    g = Grid1D(10.0, 100)
    s = FPState(0.0, g, np.exp(-g.centers**2))
    with pytest.raises(StabilityViolation):
        fp_step(s, 1.5 * max_stable_ds(g))
    with pytest.raises(InvalidParams):
        fp_step(s, 0.0)


def test_discrete_equilibrium():
    for n in (128, 256):
        g = Grid1D(8.0, n)
        eq = discrete_equilibrium(g)
        assert np.max(np.abs(fp_rhs(g, eq))) < 1e-10
        # variance sits dy**2/4 below the continuum value 1/2
        assert fp_record(FPState(0.0, g, eq)).variance == pytest.approx(0.5 - g.dy**2 / 4,
                                                                        abs=1e-12)
    with pytest.raises(InvalidParams):
        discrete_equilibrium(Grid1D(10.0, 16))


def test_moment_odes():
    # m' = -2m and (v - 1/2)' = -4(v - 1/2), to O(dy**2)
    g = Grid1D(8.0, 256)
    recs = []
    fp_relax(FPState(0.0, g, asymmetric_bumps(g)), 2.0, recs.append, observe_every=0.25)
    r0 = recs[0]
    for r in recs:
        assert r.mass == pytest.approx(r0.mass, rel=1e-13)
        assert r.mean == pytest.approx(r0.mean * math.exp(-2 * r.s), abs=g.dy**2)
        v = 0.5 + (r0.variance - 0.5) * math.exp(-4 * r.s)
        assert r.variance == pytest.approx(v, abs=g.dy**2)


def test_relaxes_to_discrete_equilibrium():
    g = Grid1D(8.0, 256)
    R0 = asymmetric_bumps(g)
    out = fp_relax(FPState(0.0, g, R0), 6.0)
    eq = discrete_equilibrium(g, g.integrate(R0))
    assert g.integrate(np.abs(out.R - eq)) < 1e-4 * g.integrate(np.abs(R0 - eq))


def test_gamma_stays_at_discretisation_level():
    g = Grid1D(8.0, 256)
    recs = []
    fp_relax(FPState(0.0, g, np.exp(-g.centers**2)), 2.0, recs.append, observe_every=0.5)
    assert max(r.l1 for r in recs) < 2e-3
    assert max(r.relative_entropy for r in recs) < 1e-5


def test_l1_and_entropy_decrease_double_bump():
    # monotone until the distance reaches the O(dy**2) equilibrium offset
    g = Grid1D(8.0, 256)
    y = g.centers
    R0 = np.exp(-(y - 1.5) ** 2 / 0.5) + np.exp(-(y + 1.5) ** 2 / 0.5)
    floor = fp_record(FPState(0.0, g, discrete_equilibrium(g, g.integrate(R0)))).l1
    recs = []
    fp_relax(FPState(0.0, g, R0), 3.0, recs.append, observe_every=0.1)
    l1 = np.array([r.l1 for r in recs])
    H = np.array([r.relative_entropy for r in recs])
    above = l1[:-1] > 10 * floor
    assert above.sum() > 10
    assert np.all(np.diff(l1)[above] < 0)
    assert np.all(np.diff(H)[above] < 0)
    assert l1[-1] < 2 * floor


def test_entropy_rate_is_twice_the_gap():
    # relative entropy is quadratic in the perturbation, so it decays at 2|lambda_1|
    g = Grid1D(8.0, 400)
    recs = []
    fp_relax(FPState(0.0, g, asymmetric_bumps(g)), 2.5, recs.append, observe_every=0.1)
    s = np.array([r.s for r in recs])
    H = np.array([r.relative_entropy for r in recs])
    window = s >= 1.0 - 1e-9
    rate = fit_decay_rate(s[window], H[window])
    assert rate / 2 == pytest.approx(spectral_gap(Grid1D(8.0, 400)), rel=0.1)


def test_fit_decay_rate_exact():
    s = np.linspace(0, 3, 10)
    assert fit_decay_rate(s, 5 * np.exp(-1.7 * s)) == pytest.approx(1.7, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(shift=st.floats(-2, 2), width=st.floats(0.1, 2.0), amp=st.floats(0.1, 10))
def test_positivity_and_mass(shift, width, amp):
    g = Grid1D(8.0, 128)
    R0 = amp * np.exp(-((g.centers - shift) / width) ** 2)
    out = fp_relax(FPState(0.0, g, R0), 0.2)
    assert np.all(out.R >= 0)
    assert out.mass == pytest.approx(g.integrate(R0), rel=1e-12)


def test_record_of_gamma():
    g = Grid1D(8.0, 256)
    r = fp_record(FPState(0.0, g, np.exp(-g.centers**2)))
    assert abs(r.relative_entropy) < 1e-14
    assert r.l1 < 1e-14
    assert r.mean == pytest.approx(0.0, abs=1e-15)


def test_relax_validation():
    g = Grid1D(8.0, 64)
    s = FPState(0.0, g, np.exp(-g.centers**2))
    with pytest.raises(InvalidParams):
        fp_relax(s, 0.0)
    with pytest.raises(InvalidParams):
        FPState(0.0, g, np.ones(10))
