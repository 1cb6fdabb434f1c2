from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasiloc.torus import (GOLDEN_MEAN, ResonantFrequencyError, as_frequency, convergents,
                            diophantine_profile, shift, torus_dist)


def test_shift_examples():
    assert shift(0.3, 0.7, 0) == pytest.approx([0.3])
    assert shift(0.9, 0.25, 1) == pytest.approx([0.15])
    with pytest.raises(ValueError):
        shift([0.1], [[0.2, 0.3]], [1])


def test_shift_many_sites_shape():
    out = shift([0.1, 0.2], [[0.3, 0.1], [0.5, 0.7]], np.array([[0, 0], [1, 2]]))
    assert out.shape == (2, 2)
    assert out[1] == pytest.approx([(0.1 + 0.3 + 0.2) % 1, (0.2 + 0.5 + 1.4) % 1])


def test_shift_group_action():
    rng = np.random.default_rng(0)
    for _ in range(100):
        w = rng.random(2)
        a = rng.random((2, 3)) * 10
        x, y = rng.integers(-50, 50, 3), rng.integers(-50, 50, 3)
        lhs = shift(shift(w, a, x), a, y)
        rhs = shift(w, a, x + y)
        assert torus_dist(lhs, rhs) < 1e-12


def test_torus_dist_examples():
    assert torus_dist(0.9, 0.05) == pytest.approx(0.15)
    assert torus_dist(0.3, 0.3) == 0
    assert torus_dist([0.1, 0.4], [0.95, 0.5]) == pytest.approx(0.15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=6, max_size=6))
def test_torus_dist_metric(v):
    a, b, c = np.array(v[:2]), np.array(v[2:4]), np.array(v[4:])
    assert 0 <= torus_dist(a, b) <= 0.5
    assert torus_dist(a, b) == pytest.approx(torus_dist(b, a), abs=1e-12)
    assert torus_dist(a, c) <= torus_dist(a, b) + torus_dist(b, c) + 1e-12


def test_profile_golden_small():
    fit = diophantine_profile(GOLDEN_MEAN, 10)
    L, m = fit.samples[-1]
    assert L == 10 and m == pytest.approx(0.0557280900, abs=1e-9)
    assert abs(8 * GOLDEN_MEAN - round(8 * GOLDEN_MEAN)) == pytest.approx(m)


def test_profile_nonincreasing_and_fit():
    fit = diophantine_profile(GOLDEN_MEAN, 10**4)
    m = [s[1] for s in fit.samples]
    assert all(b <= a for a, b in zip(m, m[1:]))
    assert 0.8 <= fit.fitted_A <= 1.2 and fit.r_squared >= 0.9 and fit.fitted_c > 0


def test_profile_rational_resonance():
    with pytest.raises(ResonantFrequencyError, match="x = 2") as info:
        diophantine_profile(0.5, 100)
    assert info.value.witness == (2,)


def test_exact_path_agrees_with_brute_force():
    brute = diophantine_profile(GOLDEN_MEAN, 2000, exact=False)
    exact = diophantine_profile(GOLDEN_MEAN, 2000, exact=True)
    assert [r[0] for r in exact.records] == [r[0] for r in brute.records]
    for (_, a), (_, b) in zip(exact.records, brute.records):
        assert a == pytest.approx(b, rel=1e-9)


def test_profile_2d_matches_direct_minimum():
    alpha = np.array([[np.sqrt(2) - 1, np.sqrt(3) - 1]])
    fit = diophantine_profile(alpha, 6)
    best = min(min(abs(v - round(v)) for v in [alpha[0] @ np.array([x, y])])
               for x in range(-6, 7) for y in range(-6, 7) if 0 < abs(x) + abs(y) <= 6)
    assert fit.samples[-1][1] == pytest.approx(best, abs=1e-12)


def test_convergents_of_golden_ratio_rational():
    cs = list(convergents(Fraction(21, 34)))
    assert cs[-1] == Fraction(21, 34)
    # 21/34 = [0; 1, 1, 1, 1, 1, 1, 2]
    assert [c.denominator for c in cs] == [1, 1, 2, 3, 5, 8, 13, 34]


def test_as_frequency_shapes():
    assert as_frequency([0.1, 0.2, 0.3, 0.4], nu=2).shape == (2, 2)
    with pytest.raises(ValueError):
        as_frequency([0.1, 0.2, 0.3], nu=2)
