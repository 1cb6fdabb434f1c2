"""Acceptance suite: one PASS/FAIL line per criterion, printed in the pytest summary.

Run alone with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""
import itertools
import sys
import time

import numpy as np
import pytest

from conftest import CLI_CONFIGS
from quasiloc.cli import SUBCOMMANDS, main
from quasiloc.hull import SpectralWeight, sample_hull
from quasiloc.interp import (Majorant, build_bump, conditional_variance_grid, karhunen_lower_bound,
                             majorant_weight, measured_eta, var_bound)
from quasiloc.lattice import Box, BoxDifference, LRectangle, are_disjoint, boundary, centered_box
from quasiloc.msa import MsaParams, check_msa_assumptions, median_mass, sparsity_scan
from quasiloc.operator import (FiniteOperator, OperatorConfig, assemble, green_decay_rate, resolvent_identity_residual,
                               resolvent_norm)
from quasiloc.torus import GOLDEN_MEAN, ResonantFrequencyError, diophantine_profile

SQRT = Majorant.sqrt_exp()
EXP04 = SpectralWeight.exponential(1, 0.4)


def test_criterion_1_interpolation_sandwich(acceptance):
    t0 = time.perf_counter()
    w = majorant_weight(SQRT, nu=1, cutoff=64)
    rows, ok = [], True
    for eps in (0.5, 0.25, 0.125):
        vb = var_bound(w, SQRT, eps)
        kl = karhunen_lower_bound(w, SQRT, eps)
        cg = conditional_variance_grid(w, [0.0], eps, 256, jitter=1e-10)
        ok &= vb <= 1.05 * kl <= 1.05**2 * cg
        rows.append(f"eps={eps}: {vb:.3e} <= {kl:.3e} <= {cg:.3e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    assert acceptance(1, ok, "; ".join(rows) + f" ({elapsed:.1f} s)")


def test_criterion_2_bump_invariants(acceptance):
    rng = np.random.default_rng(0)
    ok, notes = True, []
    for eps in (0.5, 0.25):
        k0 = build_bump(SQRT, eps).k0
        bump = build_bump(SQRT, eps, j_cut=k0 + 40)
        xi, g = bump.reconstruct(n_xi=4096)
        outside = np.abs(g[np.abs(xi) > eps]).max() / np.abs(g).max()
        exact_one = bump.ghat(0.0) == 1.0
        # closed form for M = exp(sqrt t): S(t) = 2 / sqrt(t), so S^{-1}(eps/e) = (2e/eps)^2
        lam = rng.uniform(0, bump.radii[-1], 1000)
        with np.errstate(divide="ignore"):
            log_ghat = np.log(np.abs(bump.ghat(lam)))
        violations = int(np.sum(log_ghat > 1 + 2 * np.e / eps - np.sqrt(lam)))
        ok &= outside <= 1e-6 and exact_one and violations == 0
        if eps == 0.5:
            ok &= k0 == 11
        notes.append(f"eps={eps}: k0={k0} outside={outside:.1e} ghat(0)==1:{exact_one} violations={violations}")
    assert acceptance(2, ok, "; ".join(notes))


def test_criterion_3_eta_exponent(acceptance):
    t0 = time.perf_counter()
    eta, _ = measured_eta(EXP04, 2.0 ** -np.arange(1, 6))
    elapsed = time.perf_counter() - t0
    target = 0.4 / 0.6
    ok = abs(eta - target) <= 0.25 * target and elapsed < 300
    assert acceptance(3, ok, f"eta={eta:.4f} target={target:.4f} ({elapsed:.1f} s)")


def random_nested_instance(rng):
    """A random operator on a box of <= 100 sites and a nested subset (box or box difference)."""
    d = int(rng.integers(1, 3))
    if d == 1:
        n = int(rng.integers(10, 101))
        B = Box(((0, n - 1),))
    else:
        B = Box(((0, int(rng.integers(4, 11)) - 1), (0, int(rng.integers(4, 11)) - 1)))
    op = FiniteOperator(B.sites(), rng.normal(scale=2, size=B.size), region=B)

    def sub_box(outer):
        iv = []
        for a, b in outer.intervals:
            lo = int(rng.integers(a, b + 1))
            iv.append((lo, int(rng.integers(lo, b + 1))))
        return Box(tuple(iv))

    s = sub_box(B)
    if rng.random() < 0.5 and s.size > 4:
        hole = sub_box(s)
        if hole.size < s.size:
            s = BoxDifference(s, hole)
    return op, s


def test_criterion_4_green_decay_and_resolvent_identity(acceptance):
    op = assemble(Box(((-50, 50),)), 0.0, GOLDEN_MEAN, None, 0)
    rate, _, _ = green_decay_rate(op, 5.0, (0,), r_min=10, r_max=40)
    mu = -np.log((5 - np.sqrt(21)) / 2)
    ok = abs(rate - 1.5668) <= 0.01 * 1.5668 and abs(rate - mu) <= 0.01 * mu
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        op_b, s = random_nested_instance(rng)
        pts = s.sites()
        x, y = (tuple(pts[k]) for k in rng.integers(0, len(pts), 2))
        E = float(rng.normal())
        while min(op_b.spectral_distance(E), op_b.restrict(s).spectral_distance(E)) < 1e-6:
            E += 0.01
        worst = max(worst, resolvent_identity_residual(op_b, s, E, x, y))
    ok &= worst < 1e-8
    assert acceptance(4, ok, f"rate={rate:.5f} (closed form {mu:.5f}); identity residual max={worst:.1e}")


def test_criterion_5_msa_certificate(acceptance):
    params = MsaParams(m=1, b=0.5, gamma=1.6, J=2, L0=10)
    free = OperatorConfig.make(0.0, GOLDEN_MEAN, None, 0)
    times, notes = [], []

    t0 = time.perf_counter()
    c1 = check_msa_assumptions(params, free, [-6, -5, 5, 6], k_max=1)
    times.append(time.perf_counter() - t0)
    ok1 = c1.overall
    notes.append(f"(i) pass={ok1}")

    t0 = time.perf_counter()
    c2 = check_msa_assumptions(params, free, [-6, -5, 0, 5, 6], k_max=1)
    times.append(time.perf_counter() - t0)
    fail2 = [v for v in c2.failures() if v["assumption"] == "2"]
    ok2 = not c2.overall and bool(fail2) and len(fail2[0]["witness"]) == params.J
    notes.append(f"(ii) assumption-2 witness={fail2[0]['witness'] if fail2 else None}")

    t0 = time.perf_counter()
    hs = sample_hull(EXP04, 7)
    strong = OperatorConfig.make(0.1, GOLDEN_MEAN, hs, 1e6)
    ev = strong.operator(centered_box(351, 1)).eigenvalues
    c3 = check_msa_assumptions(params, strong, np.linspace(ev[0], ev[-1], 32), k_max=0)
    times.append(time.perf_counter() - t0)
    ok3 = c3.overall
    notes.append(f"(iii) pass={ok3}")

    ok = ok1 and ok2 and ok3 and max(times) < 120
    assert acceptance(5, ok, "; ".join(notes) + " (" + ", ".join(f"{t:.1f}" for t in times) + " s)")


def test_criterion_6_localization_trend(acceptance):
    t0 = time.perf_counter()
    hs = sample_hull(EXP04, 0)
    box = Box(((0, 199),))
    masses = [median_mass(assemble(box, 0.0, GOLDEN_MEAN, hs, g), range(90, 110)) for g in (0.1, 1, 10, 50)]
    elapsed = time.perf_counter() - t0
    ok = all(b >= a - 0.02 for a, b in zip(masses, masses[1:])) and masses[-1] >= 1.0 and elapsed < 120
    assert acceptance(6, ok, "medians " + ", ".join(f"{m:.3f}" for m in masses) + f" ({elapsed:.1f} s)")


def test_criterion_7_diophantine_fit(acceptance):
    fit = diophantine_profile(GOLDEN_MEAN, 10**4)
    ok = 0.8 <= fit.fitted_A <= 1.2 and fit.r_squared >= 0.9
    try:
        diophantine_profile(0.5, 100)
        witness = None
    except ResonantFrequencyError as e:
        witness = e.witness
    ok &= witness == (2,)
    assert acceptance(7, ok, f"A={fit.fitted_A:.4f} r2={fit.r_squared:.4f}; alpha=1/2 witness={witness}")


def brute_boundary(box):
    inside = {tuple(p) for p in box.sites().tolist()}
    pairs = set()
    for u in inside:
        for axis in range(box.d):
            for step in (-1, 1):
                v = list(u)
                v[axis] += step
                if tuple(v) not in inside:
                    pairs.add((u, tuple(v)))
    return sorted(pairs)


def random_box(rng, d):
    lo = rng.integers(-6, 6, d)
    return Box(tuple((int(a), int(a + rng.integers(0, 6))) for a in lo))


def site_set(b):
    return {tuple(p) for p in b.sites().tolist()}


def test_criterion_8_oracle_equivalence(acceptance):
    rng = np.random.default_rng(8)
    # sparsity scan vs exhaustive subset search
    sparse_bad = 0
    for _ in range(200):
        d, J = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        rects = [LRectangle.at(tuple(int(c) for c in rng.integers(0, 30, d)), int(rng.integers(2, 6)),
                               int(rng.integers(0, d))) for _ in range(int(rng.integers(0, 21)))]
        flags = list(rng.random(len(rects)) < 0.6)
        sets = [site_set(r.box) for r, f in zip(rects, flags) if f]
        exhaustive = not any(all(not (a & b) for a, b in itertools.combinations(c, 2))
                             for c in itertools.combinations(sets, J))
        sparse_bad += sparsity_scan(None, rects, flags, J).passed != exhaustive
    # boundary and disjointness vs site sets
    geom_bad = 0
    for _ in range(200):
        d = int(rng.integers(1, 4))
        a, b = random_box(rng, d), random_box(rng, d)
        geom_bad += list(boundary(a).pairs) != brute_boundary(a)
        geom_bad += are_disjoint(a, b) != (not site_set(a) & site_set(b))
    # resolvent norm vs dense 2-norm of the inverse
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 60))
        op = FiniteOperator(np.arange(n)[:, None], rng.normal(scale=3, size=n))
        E = float(rng.normal(scale=3))
        dense = np.linalg.norm(np.linalg.inv(op.matrix - E * np.eye(n)), 2)
        worst = max(worst, abs(resolvent_norm(op, E) - dense) / dense)
    ok = sparse_bad == 0 and geom_bad == 0 and worst <= 1e-8
    assert acceptance(8, ok, f"sparsity mismatches={sparse_bad}; geometry mismatches={geom_bad}; "
                             f"norm rel err max={worst:.1e}")


def test_criterion_9_cli_determinism(acceptance, write_config, tmp_path):
    differing = []
    for command in SUBCOMMANDS:
        path = write_config(command)
        outs = [tmp_path / command / run for run in ("a", "b")]
        codes = [main([command, "--config", str(path), "--out", str(o)]) for o in outs]
        names = sorted(p.name for p in outs[0].glob("*.csv"))
        same = codes == [0, 0] and bool(names) and all(
            (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
        if not same:
            differing.append(command)
    ok = not differing and set(CLI_CONFIGS) == set(SUBCOMMANDS)
    assert acceptance(9, ok, f"{len(SUBCOMMANDS)} subcommands; differing: {differing or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
