import numpy as np
import pytest
from scipy import integrate

from quasiloc.hull import SpectralWeight
from quasiloc.interp import (Majorant, MajorantError, S_inverse, S_of, build_bump, conditional_variance_grid,
                             epsilon_max, fit_eta, karhunen_lower_bound, majorant_weight, measured_eta, var_bound,
                             variance_report, weight_majorant_sum)

SQRT = Majorant.sqrt_exp()


def test_S_closed_form():
    assert S_of(SQRT, 4.0) == pytest.approx(1.0)
    assert S_of(SQRT, 9.0) == pytest.approx(2 / 3)
    assert S_of(SQRT, 4.0) >= S_of(SQRT, 9.0)


@pytest.mark.parametrize("t", [1.0, 4.0, 16.0])
def test_S_quadrature_matches(t):
    assert S_of(SQRT, t, method="quad") == pytest.approx(S_of(SQRT, t), abs=1e-8)


def test_S_divergent():
    with pytest.raises(MajorantError, match="majorant too large"):
        S_of(Majorant.power_exp(1.0, 1.0), 2.0)


def test_S_inverse():
    assert S_inverse(SQRT, 1.0) == pytest.approx(4.0)
    assert S_inverse(SQRT, 0.5 / np.e) == pytest.approx(16 * np.e**2, rel=1e-10)
    for y in np.logspace(-4, 0, 9):
        assert S_of(SQRT, S_inverse(SQRT, y)) == pytest.approx(y, rel=1e-8)


def test_table_majorant_matches_builtin():
    t = np.linspace(0, 400, 4001)
    tab = Majorant.table(t, np.exp(np.sqrt(t)))
    assert S_of(tab, 9.0) == pytest.approx(2 / 3, rel=1e-3)
    assert S_inverse(tab, 0.5) == pytest.approx(16.0, rel=1e-3)


def test_bump_k0_and_invariants():
    b = build_bump(SQRT, 0.5)
    assert b.k0 == 11
    assert np.allclose(b.radii, np.arange(11, b.j_cut + 1) ** 2)
    assert b.half_support <= 0.5
    assert b.ghat(0.0) == 1.0
    xi, g = b.reconstruct(n_xi=4096)
    assert np.abs(g[np.abs(xi) > 0.5]).max() <= 1e-6 * np.abs(g).max()
    assert np.argmax(g) == np.argmin(np.abs(xi))
    lam = np.linspace(0, b.radii[-1], 1000)
    assert b.decay_violations(lam) == 0


def test_bump_g0_independent_oracles():
    b = build_bump(SQRT, 0.5)
    g0 = b.g0()
    # the inverse transform at 0 is (1/pi) int_0^inf ghat
    quad = integrate.quad(b.ghat_1d, 0, b.radii[0] * 40, limit=2000)[0] / np.pi
    assert g0 == pytest.approx(quad, rel=1e-4)
    # Poisson: sum_n ghat(2 pi n / P) / P = sum_k g(k P) = g(0) for period P > support
    P = 4.0
    n = np.arange(-200000, 200001)
    poisson = b.ghat_1d(2 * np.pi * n / P).sum() / P
    assert g0 == pytest.approx(poisson, rel=1e-6)


def test_bump_errors():
    with pytest.raises(ValueError):
        build_bump(SQRT, 1.5)
    with pytest.raises(ValueError):
        build_bump(SQRT, 0.5, j_cut=12)


def test_weight_majorant_sum_closed_form():
    w = majorant_weight(SQRT, cutoff=64)
    n = np.arange(-64, 65)
    assert weight_majorant_sum(w, SQRT) == pytest.approx(np.sum(1 / (1 + n**2.0)), rel=1e-12)
    w_big = majorant_weight(SQRT, cutoff=20000)
    assert weight_majorant_sum(w_big, SQRT) == pytest.approx(np.pi / np.tanh(np.pi), rel=1e-4)


def test_karhunen_scale_invariance():
    w = majorant_weight(SQRT, cutoff=64)
    a = karhunen_lower_bound(w, SQRT, 0.5)
    b = karhunen_lower_bound(w, SQRT, 0.5, j_cut=None)
    assert a == pytest.approx(b)


def test_var_bound_closed_form():
    w = majorant_weight(SQRT, cutoff=64)
    K = weight_majorant_sum(w, SQRT)
    want = 1 / (np.e**2 * 4 * K * 0.25 * np.exp(2 * np.e))
    assert var_bound(w, SQRT, 0.5) == pytest.approx(want, rel=1e-10)


def test_var_bound_monotone():
    w = majorant_weight(SQRT, cutoff=64)
    eps = np.logspace(-3, np.log10(0.5), 12)
    vals = [var_bound(w, SQRT, e) for e in eps]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_epsilon_hypothesis():
    w = majorant_weight(SQRT, cutoff=64)
    assert epsilon_max(SQRT) == 0.5
    with pytest.raises(ValueError):
        var_bound(w, SQRT, 0.75)


def test_three_mode_process_is_determined():
    w = SpectralWeight.from_function(lambda t: np.ones_like(t), cutoff=1, name="unit")
    assert conditional_variance_grid(w, [0.0], 0.1, 16, jitter=1e-10) <= 1e-6


def test_empty_observation_set():
    w = SpectralWeight.exponential(1, 0.4, cutoff=30)
    # grid of 4 points: every observation lies within 0.5 of the center
    assert conditional_variance_grid(w, [0.0], 0.5 + 1e-9, 4) == pytest.approx(w.variance())


def test_nested_grids_monotone():
    w = SpectralWeight.exponential(1, 0.4, cutoff=30)
    coarse = conditional_variance_grid(w, [0.0], 0.25, 32)
    fine = conditional_variance_grid(w, [0.0], 0.25, 64)
    assert fine <= coarse + 1e-9


def test_conditional_variance_nondecreasing_in_eps():
    w = SpectralWeight.exponential(1, 0.4)
    vals = [conditional_variance_grid(w, [0.0], e, 256) for e in (0.0625, 0.125, 0.25, 0.5)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_fit_eta_synthetic():
    eps = 2.0 ** -np.arange(1, 7)
    assert fit_eta([(e, np.exp(-1 / e)) for e in eps]) == pytest.approx(1.0, abs=0.01)
    assert fit_eta([(e, np.exp(-2 * e**-0.5)) for e in eps]) == pytest.approx(0.5, abs=0.01)
    with pytest.raises(ValueError):
        fit_eta([(0.5, 0.1), (0.25, 0.0), (0.1, 0.01), (0.05, 0.001)])


def test_variance_report_chain():
    w = majorant_weight(SQRT, cutoff=64)
    for e in (0.5, 0.25):
        r = variance_report(w, SQRT, e)
        assert r.chain_ok and r.cutoff == 64 and r.jitter == 1e-10


def test_measured_eta_exp_weight():
    eta, curve = measured_eta(SpectralWeight.exponential(1, 0.4), 2.0 ** -np.arange(1, 6))
    assert abs(eta - 2 / 3) <= 0.25 * 2 / 3
    assert len(curve) == 5


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_table_cellwise_integral_matches_quadrature():
    t = np.linspace(0, 400, 4001)
    tab = Majorant.table(t, np.exp(np.sqrt(t)))
    for x in (0.05, 1.0, 9.0, 100.0):
        assert S_of(tab, x) == pytest.approx(S_of(tab, x, method="quad"), rel=1e-7)
