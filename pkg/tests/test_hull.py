import numpy as np
import pytest

from quasiloc.hull import (HullSample, SpectralWeight, covariance, eval_hull, eval_on_grid, holder_estimate,
                           sample_hull)


def unit_weight(cutoff=1, nu=1):
    return SpectralWeight.from_function(lambda t: np.ones_like(t), nu=nu, cutoff=cutoff, name="unit")


def direct_sum(hs, omega):
    # independent oracle: explicit loop over the coefficient table
    total = 0.0
    for n, (g, h) in hs.coeffs.items():
        w = hs.weight(2 * np.pi * max(abs(k) for k in n))
        phase = 2 * np.pi * float(np.dot(n, omega))
        total += (g * np.cos(phase) + h * np.sin(phase)) / np.sqrt(w)
    return total


def test_single_cosine_mode():
    hs = HullSample.from_coefficients({(1,): (1.0, 0.0)})
    assert eval_hull(hs, [0.0]) == pytest.approx(1.0)
    assert eval_hull(hs, [0.25]) == pytest.approx(0.0, abs=1e-12)


def test_eval_matches_direct_summation():
    w = SpectralWeight.exponential(1, 0.4, cutoff=40)
    hs = sample_hull(w, 11)
    pts = np.random.default_rng(2).random((100, 1))
    fast = eval_hull(hs, pts)
    slow = np.array([direct_sum(hs, p) for p in pts])
    assert np.max(np.abs(fast - slow)) < 1e-10


def test_grid_fft_matches_direct():
    w = SpectralWeight.power(1.0, 2.0, nu=2, cutoff=6)
    hs = sample_hull(w, 5)
    n = 16
    grid = eval_on_grid(hs, n)
    pts = np.stack(np.meshgrid(np.arange(n) / n, np.arange(n) / n, indexing="ij"), -1).reshape(-1, 2)
    assert np.allclose(grid.ravel(), eval_hull(hs, pts), atol=1e-10)


def test_seed_determinism_and_nesting():
    w = SpectralWeight.exponential(1, 0.4, cutoff=20)
    a, b = sample_hull(w, 3), sample_hull(w, 3)
    assert a.coeffs == b.coeffs
    big = sample_hull(SpectralWeight.exponential(1, 0.4, cutoff=30), 3).coeffs
    assert all(big[k] == v for k, v in a.coeffs.items())


def test_seed_required():
    with pytest.raises(ValueError):
        sample_hull(unit_weight(), None)


def test_three_mode_covariance():
    w = unit_weight(1)
    assert covariance(w, 0.3, 0.3) == pytest.approx(3.0)
    d = 0.17
    assert covariance(w, 0.5 + d, 0.5) == pytest.approx(1 + 2 * np.cos(2 * np.pi * d))


def test_covariance_stationary_and_symmetric():
    w = SpectralWeight.exponential(1, 0.4, nu=2, cutoff=8)
    a, b, s = np.array([0.1, 0.7]), np.array([0.4, 0.2]), np.array([0.33, 0.91])
    assert covariance(w, a, b) == pytest.approx(covariance(w, a + s, b + s), abs=1e-12)
    assert covariance(w, a, b) == pytest.approx(covariance(w, b, a), abs=1e-12)
    assert covariance(w, a, a) == pytest.approx(w.variance())


def test_monte_carlo_variance_and_covariance():
    w = SpectralWeight.exponential(1, 0.4, cutoff=12)
    a, b = np.array([0.0]), np.array([0.13])
    vals = np.array([[eval_hull(hs, a), eval_hull(hs, b)] for hs in (sample_hull(w, s) for s in range(10**4))])
    assert np.var(vals[:, 0]) == pytest.approx(w.variance(), rel=0.05)
    emp = np.mean(vals[:, 0] * vals[:, 1])
    assert emp == pytest.approx(covariance(w, a, b), rel=0.05)
    g = np.concatenate([sample_hull(w, s).g for s in range(2000)])
    assert abs(g.mean()) <= 4 / np.sqrt(len(g))


def test_truncation_honesty():
    w_small = SpectralWeight.exponential(1, 0.4, cutoff=50)
    w_big = SpectralWeight.exponential(1, 0.4, cutoff=200)
    gain = w_big.variance() - w_small.variance()
    assert 0 <= gain <= w_small.tail() + 1e-15


def test_automatic_cutoff_tolerance():
    w = SpectralWeight.exponential(1, 0.4)
    assert w.tail() <= 1e-8 * w.total_variance() * 1.0001


def test_holder_constant_hull_is_zero():
    hs = HullSample.from_coefficients({(0,): (1.3, 0.0)})
    rep = holder_estimate(hs, 1.0, 64)
    assert rep.holder_const == pytest.approx(0.0, abs=1e-12)
    assert rep.sup_norm == pytest.approx(1.3)


def test_holder_cosine_lipschitz():
    hs = HullSample.from_coefficients({(1,): (1.0, 0.0)})
    rep = holder_estimate(hs, 1.0, 512)
    assert rep.holder_const == pytest.approx(2 * np.pi, rel=0.02)
    assert rep.grid_step == 1 / 512


def test_holder_refinement_stable_for_smooth_weight():
    hs = sample_hull(SpectralWeight.power(1.0, 3.0), 4)
    a = holder_estimate(hs, 1.0, 256).holder_const
    b = holder_estimate(hs, 1.0, 512).holder_const
    assert abs(a - b) / b < 0.1


def test_weight_validation():
    with pytest.raises(ValueError):
        SpectralWeight.power(-1, 2)
    with pytest.raises(ValueError):
        SpectralWeight.exponential(1, 0)
