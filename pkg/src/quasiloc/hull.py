"""
Stationary Gaussian hull functions on the torus.

A realisation is the random trigonometric series

    v(omega) = sum_n (g_n cos(2 pi <omega, n>) + h_n sin(2 pi <omega, n>)) / sqrt(W(2 pi n))

over all n in Z^nu with ``||n||_inf <= cutoff``, where g_n, h_n are independent
standard normals.  Both n and -n carry their own coefficients, so the
covariance is ``sum_n cos(2 pi <a - b, n>) / W(2 pi n)``.

Weights are radial in the l-infinity norm of the frequency ``l = 2 pi n``; this
makes every l-infinity shell of modes share one weight value, which keeps tail
sums exact and cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .torus import torus_norm

__all__ = [
    "SpectralWeight",
    "HullSample",
    "HolderReport",
    "mode_grid",
    "sample_hull",
    "eval_hull",
    "eval_on_grid",
    "covariance",
    "holder_estimate",
    "shell_count",
]

_TAIL_SUM_RADIUS = 1 << 20


def shell_count(r, nu: int):
    """Number of n in Z^nu with ``||n||_inf == r``."""
    r = np.asarray(r, dtype=float)
    return np.where(r == 0, 1.0, (2 * r + 1) ** nu - (2 * r - 1) ** nu)


def mode_grid(nu: int, cutoff: int) -> np.ndarray:
    """All n in Z^nu with ``||n||_inf <= cutoff``, lexicographic, as an int array."""
    axes = [np.arange(-cutoff, cutoff + 1)] * nu
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


@dataclass(frozen=True, eq=False)
class SpectralWeight:
    """Radial spectral weight ``W(l)`` with a mode cutoff.

    ``func`` maps the l-infinity norm ``t = ||l||`` (an array) to ``W``.  Use
    the ``power``, ``exponential`` and ``from_function`` constructors; they pick
    ``cutoff`` so that the discarded variance is at most ``tol`` times the
    total, unless a cutoff is given explicitly.
    """

    nu: int
    func: Callable
    cutoff: int
    kind: str = "table"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        w = self(np.arange(self.cutoff + 1) * 2 * np.pi)
        if not np.all(np.isfinite(w) & (w > 0)):
            raise ValueError("weight must be positive and finite on retained modes")

    # -- constructors -------------------------------------------------------
    @classmethod
    def power(cls, c: float, delta: float, nu: int = 1, cutoff=None, tol=1e-8, max_cutoff=None):
        """``W(l) = c (1 + ||l||)^(nu + delta)``."""
        if c <= 0 or delta <= 0:
            raise ValueError("power weight needs c > 0 and delta > 0")
        expo = nu + delta

        def func(t):
            return c * (1.0 + np.asarray(t, dtype=float)) ** expo

        return cls._build(nu, func, "power", {"c": c, "delta": delta}, cutoff, tol, max_cutoff)

    @classmethod
    def exponential(cls, C: float, zeta: float, nu: int = 1, cutoff=None, tol=1e-8, max_cutoff=None):
        """``W(l) = C exp(C ||l||^zeta)``."""
        if C <= 0 or zeta <= 0:
            raise ValueError("exponential weight needs C > 0 and zeta > 0")

        def func(t):
            return C * np.exp(C * np.asarray(t, dtype=float) ** zeta)

        return cls._build(nu, func, "exp", {"C": C, "zeta": zeta}, cutoff, tol, max_cutoff)

    @classmethod
    def from_function(cls, func, nu: int = 1, cutoff=None, tol=1e-8, max_cutoff=None, name="table"):
        """Weight from an arbitrary vectorised callable of ``||l||``."""
        return cls._build(nu, func, name, {}, cutoff, tol, max_cutoff)

    @classmethod
    def _build(cls, nu, func, kind, params, cutoff, tol, max_cutoff):
        if max_cutoff is None:
            max_cutoff = {1: 8192, 2: 256}.get(nu, 32)
        if cutoff is None:
            cutoff = _choose_cutoff(nu, func, tol, max_cutoff)
        return cls(nu=nu, func=func, cutoff=int(cutoff), kind=kind, params=dict(params))

    # -- evaluation -----------------------------------------------------------
    def __call__(self, t):
        """W at frequencies of l-infinity norm ``t``."""
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def modes(self) -> np.ndarray:
        return mode_grid(self.nu, self.cutoff)

    def mode_weights(self, modes=None) -> np.ndarray:
        modes = self.modes() if modes is None else modes
        return self(2 * np.pi * np.abs(modes).max(axis=1))

    def variance(self) -> float:
        """Variance of v(omega) for the truncated process."""
        r = np.arange(self.cutoff + 1)
        return float(np.sum(shell_count(r, self.nu) / self(2 * np.pi * r)))

    def total_variance(self) -> float:
        return self.variance() + self.tail()

    def tail(self, cutoff: int | None = None) -> float:
        """Variance carried by modes with ``||n||_inf > cutoff``."""
        cutoff = self.cutoff if cutoff is None else cutoff
        return _tail(self.nu, self.func, cutoff)

    def describe(self) -> dict:
        return {"kind": self.kind, "nu": self.nu, "cutoff": self.cutoff, **self.params,
                "tail": self.tail()}


def _shell_terms(nu, func, r):
    with np.errstate(over="ignore"):
        return shell_count(r, nu) / np.asarray(func(2 * np.pi * r), dtype=float)


def _tail(nu, func, cutoff):
    r = np.arange(cutoff + 1, _TAIL_SUM_RADIUS + 1, dtype=float)
    s = float(np.sum(_shell_terms(nu, func, r)))

    def f(t):
        return float(_shell_terms(nu, func, np.array([t]))[0])

    far, _ = integrate.quad(f, _TAIL_SUM_RADIUS + 0.5, np.inf, limit=200)
    return s + max(far, 0.0)


def _choose_cutoff(nu, func, tol, max_cutoff):
    r = np.arange(0, max_cutoff + 1, dtype=float)
    terms = _shell_terms(nu, func, r)
    if not np.all(np.isfinite(terms) & (terms > 0)):
        raise ValueError("weight must be positive and finite")
    tail_cap = _tail(nu, func, max_cutoff)
    total = terms.sum() + tail_cap
    # tail(k) for k = 0..max_cutoff
    tails = tail_cap + np.concatenate([np.cumsum(terms[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(tails <= tol * total)[0]
    return int(ok[0]) if len(ok) else int(max_cutoff)


def _zigzag(n: np.ndarray) -> np.ndarray:
    return np.where(n >= 0, 2 * n, -2 * n - 1)


@dataclass(frozen=True, eq=False)
class HullSample:
    """One realisation of the hull: coefficient arrays over the retained modes."""

    weight: SpectralWeight
    seed: int | None
    modes: np.ndarray
    g: np.ndarray
    h: np.ndarray

    @classmethod
    def from_coefficients(cls, coeffs: dict, weight: SpectralWeight | None = None, nu: int | None = None):
        """Build a sample with prescribed ``{n: (g_n, h_n)}`` (``weight`` defaults to W = 1)."""
        keys = [tuple(np.atleast_1d(k).tolist()) for k in coeffs]
        nu = nu or len(keys[0])
        if weight is None:
            cutoff = max(max(abs(v) for v in k) for k in keys)
            weight = SpectralWeight.from_function(lambda t: np.ones_like(t), nu=nu, cutoff=cutoff, name="unit")
        modes = np.array(keys, dtype=int).reshape(len(keys), nu)
        gh = np.array(list(coeffs.values()), dtype=float).reshape(len(keys), 2)
        return cls(weight=weight, seed=None, modes=modes, g=gh[:, 0], h=gh[:, 1])

    @property
    def nu(self) -> int:
        return self.modes.shape[1]

    @property
    def amplitudes(self) -> np.ndarray:
        return 1.0 / np.sqrt(self.weight.mode_weights(self.modes))

    @property
    def coeffs(self) -> dict:
        return {tuple(n): (float(a), float(b)) for n, a, b in zip(self.modes.tolist(), self.g, self.h)}

    def __call__(self, omega):
        return eval_hull(self, omega)


def _mode_normals(seed: int, modes: np.ndarray) -> np.ndarray:
    out = np.empty((len(modes), 2))
    for i, n in enumerate(_zigzag(modes).tolist()):
        ss = np.random.SeedSequence(seed, spawn_key=tuple(n))
        out[i] = np.random.Generator(np.random.Philox(ss)).standard_normal(2)
    return out


def sample_hull(w: SpectralWeight, seed: int) -> HullSample:
    """Draw a realisation.

    Each mode's pair (g_n, h_n) comes from its own Philox stream keyed by
    ``(seed, n)``, so enlarging the cutoff keeps the existing coefficients.
    """
    if seed is None:
        raise ValueError("an explicit seed is required")
    modes = w.modes()
    if len(modes) == 0:
        raise ValueError("weight retains no modes")
    gh = _mode_normals(int(seed), modes)
    return HullSample(weight=w, seed=int(seed), modes=modes, g=gh[:, 0], h=gh[:, 1])


def eval_hull(hs: HullSample, omega, chunk: int = 4096):
    """Evaluate the truncated series at one point ``(nu,)`` or many ``(P, nu)``."""
    pts = np.asarray(omega, dtype=float)
    single = pts.ndim <= 1
    pts = np.atleast_2d(pts.reshape(-1, hs.nu) if pts.ndim <= 1 else pts)
    if pts.shape[1] != hs.nu:
        raise ValueError(f"points have {pts.shape[1]} coordinates, hull lives on T^{hs.nu}")
    amp = hs.amplitudes
    a, b = hs.g * amp, hs.h * amp
    out = np.empty(len(pts))
    for lo in range(0, len(pts), chunk):
        phase = 2 * np.pi * (pts[lo:lo + chunk] @ hs.modes.T)
        out[lo:lo + chunk] = np.cos(phase) @ a + np.sin(phase) @ b
    return float(out[0]) if single else out


def eval_on_grid(hs: HullSample, grid_n: int) -> np.ndarray:
    """Values on the uniform grid ``{k / grid_n}^nu`` by FFT; array of shape ``(grid_n,)*nu``."""
    amp = hs.amplitudes
    c = (hs.g - 1j * hs.h) * amp
    spec = np.zeros((grid_n,) * hs.nu, dtype=complex)
    np.add.at(spec, tuple((hs.modes % grid_n).T), c)
    return np.real(np.fft.ifftn(spec)) * grid_n**hs.nu


def covariance(w: SpectralWeight, a, b) -> float:
    """``E v(a) v(b) = sum_{||n|| <= cutoff} cos(2 pi <a - b, n>) / W(2 pi n)``."""
    delta = np.atleast_1d(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    modes = w.modes()
    return float(np.cos(2 * np.pi * (modes @ delta)) @ (1.0 / w.mode_weights(modes)))


def covariance_table(w: SpectralWeight, deltas) -> np.ndarray:
    """Covariance at many lag vectors ``(P, nu)``."""
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    modes = w.modes()
    inv = 1.0 / w.mode_weights(modes)
    out = np.empty(len(deltas))
    for lo in range(0, len(deltas), 2048):
        out[lo:lo + 2048] = np.cos(2 * np.pi * (deltas[lo:lo + 2048] @ modes.T)) @ inv
    return out


@dataclass
class HolderReport:
    kappa: float
    sup_norm: float
    holder_const: float
    grid_step: float
    adjacent_only: bool = False

    @property
    def R(self) -> float:
        """The combined constant ``sup|v| + Hoelder quotient``."""
        return self.sup_norm + self.holder_const

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "sup_norm": self.sup_norm, "holder_const": self.holder_const,
                "grid_step": self.grid_step, "adjacent_only": self.adjacent_only, "R": self.R}


def holder_estimate(hs: HullSample, kappa: float, grid_n: int, max_pairs: int = 10**6) -> HolderReport:
    """Sup norm and kappa-Hoelder quotient of a realisation on a uniform grid.

    All pairs of grid points are compared, except when there are more than
    ``max_pairs`` of them; then only nearest neighbours along each axis are.
    """
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    vals = eval_on_grid(hs, grid_n)
    nu = vals.ndim
    npts = grid_n**nu
    adjacent = npts * (npts - 1) // 2 > max_pairs
    if adjacent:
        lags = [tuple(int(i == j) for j in range(nu)) for i in range(nu)]
    else:
        # every unordered pair corresponds to a lag in the half space
        lags = [tuple(k) for k in mode_grid(nu, grid_n // 2).tolist() if _positive_lag(k)]
    best = 0.0
    for lag in lags:
        dist = float(torus_norm(np.array(lag, dtype=float) / grid_n))
        if dist == 0:
            continue
        diff = np.abs(vals - np.roll(vals, shift=lag, axis=tuple(range(nu))))
        best = max(best, float(diff.max()) / dist**kappa)
    return HolderReport(kappa=kappa, sup_norm=float(np.abs(vals).max()), holder_const=best,
                        grid_step=1.0 / grid_n, adjacent_only=adjacent)


def _positive_lag(k) -> bool:
    for v in k:
        if v != 0:
            return v > 0
    return False
