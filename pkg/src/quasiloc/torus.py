"""
Arithmetic on the torus T^nu = (R/Z)^nu and the shift action x -> omega + alpha x.

Points are plain numpy arrays with coordinates in [0, 1); a frequency matrix is
a ``(nu, d)`` float array.  The Diophantine profile measures how fast the orbit
of the shift returns close to its starting point.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "reduce_mod1",
    "as_point",
    "as_frequency",
    "shift",
    "torus_dist",
    "torus_norm",
    "DiophantineFit",
    "ResonantFrequencyError",
    "diophantine_profile",
    "convergents",
    "GOLDEN_MEAN",
]

GOLDEN_MEAN = (np.sqrt(5.0) - 1.0) / 2.0


class ResonantFrequencyError(ValueError):
    """The orbit returns exactly to its starting point."""

    def __init__(self, witness):
        self.witness = tuple(int(v) for v in np.atleast_1d(witness))
        shown = self.witness[0] if len(self.witness) == 1 else self.witness
        super().__init__(f"frequency is resonant at x = {shown}")


def reduce_mod1(y):
    """Reduce coordinatewise into [0, 1); values that round up to 1.0 wrap to 0."""
    y = np.asarray(y, dtype=float)
    r = y - np.floor(y)
    return np.where(r >= 1.0, 0.0, r)


def as_point(omega, nu: int | None = None) -> np.ndarray:
    """Coerce to a reduced torus point (1-d array of length nu)."""
    p = reduce_mod1(np.atleast_1d(np.asarray(omega, dtype=float)))
    if p.ndim != 1:
        raise ValueError("a torus point is a 1-d array")
    if nu is not None and len(p) != nu:
        raise ValueError(f"expected a point of T^{nu}, got {len(p)} coordinates")
    return p


def as_frequency(alpha, nu: int | None = None, d: int | None = None) -> np.ndarray:
    """Coerce to a ``(nu, d)`` frequency matrix.

    A flat sequence is read row-major; a scalar is the ``nu = d = 1`` case.
    """
    a = np.asarray(alpha, dtype=float)
    if a.ndim < 2:
        flat = a.ravel()
        if nu is None and d is None:
            nu, d = (1, len(flat)) if len(flat) else (1, 1)
        elif nu is None:
            nu = len(flat) // d
        elif d is None:
            d = len(flat) // nu
        if nu * d != len(flat):
            raise ValueError(f"{len(flat)} entries do not form a {nu}x{d} frequency matrix")
        a = flat.reshape(nu, d)
    elif (nu is not None and a.shape[0] != nu) or (d is not None and a.shape[1] != d):
        raise ValueError(f"frequency matrix has shape {a.shape}, expected ({nu}, {d})")
    if not np.all(np.isfinite(a)):
        raise ValueError("frequency matrix has non-finite entries")
    return a


def shift(omega, alpha, x) -> np.ndarray:
    """``(omega + alpha x) mod 1``.

    ``x`` is a single site (length d) or an ``(n, d)`` array of sites; the
    result has shape ``(nu,)`` or ``(n, nu)`` accordingly.
    """
    omega = as_point(omega)
    alpha = as_frequency(alpha, nu=len(omega))
    x = np.asarray(x)
    single = x.ndim <= 1
    x2 = np.atleast_2d(x) if x.ndim else x.reshape(1, 1)
    if x2.shape[1] != alpha.shape[1]:
        raise ValueError(f"site has {x2.shape[1]} coordinates but alpha is {alpha.shape[0]}x{alpha.shape[1]}")
    out = reduce_mod1(omega + x2 @ alpha.T)
    return out[0] if single else out


def torus_norm(delta) -> np.ndarray:
    """l-infinity distance to the nearest integer point, along the last axis."""
    r = reduce_mod1(delta)
    return np.minimum(r, 1.0 - r).max(axis=-1)


def torus_dist(a, b) -> float:
    """l-infinity distance on T^nu; always in [0, 1/2]."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("points live on tori of different dimension")
    return torus_norm(a - b)


@dataclass
class DiophantineFit:
    """Return-distance profile and its power-law fit ``min_dist ~ c L^{-A}``."""

    samples: list = field(default_factory=list)
    fitted_A: float = float("nan")
    fitted_c: float = float("nan")
    r_squared: float = float("nan")
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"c": self.fitted_c, "A": self.fitted_A, "r2": self.r_squared}


def convergents(x: Fraction):
    """Continued-fraction convergents ``p/q`` of a rational, in order."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = x.numerator // x.denominator
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        yield Fraction(p1, q1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def _shell(d: int, L: int) -> np.ndarray:
    """Sites with ||x||_1 == L, one of each +-x pair."""
    if d == 1:
        return np.array([[L]])
    pts = []
    for head in itertools.product(range(-L, L + 1), repeat=d - 1):
        rest = L - sum(abs(h) for h in head)
        if rest < 0:
            continue
        pts.append(head + (rest,))
        if rest > 0:
            pts.append(head + (-rest,))
    pts = np.array(pts)
    # keep the representative whose first nonzero coordinate is positive
    first = pts[np.arange(len(pts)), np.argmax(pts != 0, axis=1)]
    return pts[first > 0]


def _numerically_zero(dist, ax):
    return dist <= 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(ax).max(axis=-1))


def _fit(samples):
    L = np.array([s[0] for s in samples], dtype=float)
    dist = np.array([s[1] for s in samples], dtype=float)
    keep = np.ones(len(L), dtype=bool)
    keep[1:] = dist[1:] < dist[:-1]
    records = [(int(a), float(b)) for a, b in zip(L[keep], dist[keep])]
    if len(records) < 2:
        return records, float("nan"), float("nan"), float("nan")
    xl, yl = np.log(L[keep]), np.log(dist[keep])
    slope, intercept = np.polyfit(xl, yl, 1)
    resid = yl - (slope * xl + intercept)
    ss_tot = np.sum((yl - yl.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return records, float(-slope), float(np.exp(intercept)), float(r2)


def _profile_exact_1d(alpha: float, L_max: int):
    x = Fraction(alpha)
    frac = x - (x.numerator // x.denominator)
    if frac == 0:
        raise ResonantFrequencyError([1])
    samples = []
    for conv in convergents(frac):
        q = conv.denominator
        if q > L_max:
            break
        r = (q * frac) % 1
        dist = min(r, 1 - r)
        if dist == 0:
            raise ResonantFrequencyError([q])
        if not samples or dist < samples[-1][1]:
            samples.append((q, float(dist)))
    if samples[-1][0] != L_max:
        samples.append((L_max, samples[-1][1]))
    return samples


def diophantine_profile(alpha, L_max: int, exact: bool | None = None) -> DiophantineFit:
    """Minimal return distance ``min_{0<||x||<=L} dist(alpha x, Z^nu)`` for L <= L_max.

    Brute force over the l1 ball.  For ``nu = d = 1`` an exact path through the
    continued fraction of the float value of alpha is used when ``exact`` is set
    (default: when ``L_max > 1e5``); it only reports the record-setting L.

    Raises
    ------
    ResonantFrequencyError
        If some ``x`` returns the orbit exactly to its start.
    """
    if L_max < 2:
        raise ValueError("L_max must be >= 2")
    alpha = as_frequency(alpha)
    nu, d = alpha.shape
    if exact is None:
        exact = nu == d == 1 and L_max > 10**5
    if exact:
        if nu != 1 or d != 1:
            raise ValueError("the exact path needs nu = d = 1")
        samples = _profile_exact_1d(float(alpha[0, 0]), L_max)
    elif d == 1:
        x = np.arange(1, L_max + 1, dtype=float)[:, None]
        ax = x * alpha[:, 0]
        dist = torus_norm(ax)
        zero = _numerically_zero(dist, ax)
        if zero.any():
            raise ResonantFrequencyError([int(x[np.argmax(zero), 0])])
        running = np.minimum.accumulate(dist)
        samples = [(int(L), float(m)) for L, m in zip(x[:, 0], running)]
    else:
        samples = []
        best = np.inf
        for L in range(1, L_max + 1):
            sh = _shell(d, L)
            ax = sh @ alpha.T
            dist = torus_norm(ax)
            zero = _numerically_zero(dist, ax)
            if zero.any():
                raise ResonantFrequencyError(sh[np.argmax(zero)])
            best = min(best, float(dist.min()))
            samples.append((L, best))
    records, A, c, r2 = _fit(samples)
    return DiophantineFit(samples=samples, fitted_A=A, fitted_c=c, r_squared=r2, records=records)
