"""
Interpolation error of stationary Gaussian processes on the torus.

Three routes to the conditional variance

    V(eps) = Var( v(omega) | { v(omega') : ||omega' - omega||_inf >= eps } )

are implemented and meant to be compared with each other:

* ``conditional_variance_grid`` conditions on a finite grid of observations,
  which gives an upper bound (fewer observations, more leftover variance);
* ``karhunen_lower_bound`` evaluates the variational quotient
  ``|g(0)|^2 / sum_l |g^(l)|^2 W(l)`` for an explicit compactly supported bump g;
* ``var_bound`` is the closed-form bound that follows from the decay
  properties of that bump.

The bump is an infinite product of sinc factors ``g^(lam) = prod_j u^(e lam / R_j)``,
``u^(lam) = prod_r sin(lam_r) / lam_r``, truncated at ``j_cut``, whose radii
``R_j`` are the level crossings ``M(R_j) = e^j`` of a majorant M.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy import integrate, linalg, optimize

from .hull import SpectralWeight, covariance_table, mode_grid, shell_count
from .torus import as_point

__all__ = [
    "Majorant",
    "MajorantError",
    "FourierDecayFunction",
    "VarianceReport",
    "S_of",
    "S_inverse",
    "build_bump",
    "weight_majorant_sum",
    "majorant_weight",
    "epsilon_max",
    "karhunen_lower_bound",
    "conditional_variance_grid",
    "var_bound",
    "variance_report",
    "fit_eta",
    "measured_eta",
]

E = np.e


class MajorantError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Majorant:
    """Nondecreasing envelope M with M(0) = 1, stored through ``log M``.

    Built-in kinds are ``log M(t) = a t^p`` (``exponential(C, zeta)`` is
    ``a = 2C, p = zeta``; ``sqrt()`` is ``a = 1, p = 1/2``), for which S, its
    inverse and the level radii have closed forms.  ``table`` majorants
    interpolate ``log M`` linearly and continue it as a power law past the
    last sample.
    """

    kind: str
    a: float = 1.0
    p: float = 0.5
    table_t: np.ndarray | None = None
    table_logm: np.ndarray | None = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def exponential(cls, C: float, zeta: float) -> "Majorant":
        """``M(t) = exp(2 C t^zeta)``."""
        return cls.power_exp(2.0 * C, zeta)

    @classmethod
    def sqrt_exp(cls) -> "Majorant":
        """``M(t) = exp(sqrt(t))``."""
        return cls.power_exp(1.0, 0.5)

    @classmethod
    def power_exp(cls, a: float, p: float) -> "Majorant":
        """``M(t) = exp(a t^p)``."""
        if a <= 0 or p <= 0:
            raise ValueError("need a > 0 and p > 0")
        return cls(kind="powexp", a=float(a), p=float(p))

    @classmethod
    def table(cls, t, M) -> "Majorant":
        """Majorant through samples ``(t_i, M(t_i))``; ``t_0`` must be 0 with ``M = 1``."""
        t = np.asarray(t, dtype=float)
        logm = np.log(np.asarray(M, dtype=float))
        if t[0] != 0 or abs(logm[0]) > 1e-12:
            raise ValueError("a table majorant must start at M(0) = 1")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(logm) < 0):
            raise ValueError("a table majorant must be nondecreasing on increasing t")
        if len(t) < 3 or logm[-1] <= 0 or logm[-2] <= 0:
            raise ValueError("a table majorant needs at least three samples and growth at the end")
        return cls(kind="table", table_t=t, table_logm=logm)

    # -- evaluation ---------------------------------------------------------
    @property
    def _tail_power(self) -> float:
        t, lm = self.table_t, self.table_logm
        return float(np.log(lm[-1] / lm[-2]) / np.log(t[-1] / t[-2]))

    def log_m(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "powexp":
            return self.a * np.maximum(t, 0.0) ** self.p
        tt, lm = self.table_t, self.table_logm
        q = self._tail_power
        inside = np.interp(t, tt, lm)
        with np.errstate(divide="ignore", invalid="ignore"):
            beyond = lm[-1] * (np.maximum(t, tt[-1]) / tt[-1]) ** q
        return np.where(t <= tt[-1], inside, beyond)

    def __call__(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self.log_m(t))

    def sqrt(self) -> "Majorant":
        """The majorant ``sqrt(M)``."""
        if self.kind == "powexp":
            return Majorant.power_exp(self.a / 2.0, self.p)
        return Majorant(kind="table", table_t=self.table_t, table_logm=0.5 * self.table_logm)

    def describe(self) -> dict:
        if self.kind == "powexp":
            return {"kind": "powexp", "a": self.a, "p": self.p}
        return {"kind": self.kind}

    # -- S and friends ------------------------------------------------------
    def S(self, t, method: str = "auto") -> float:
        return S_of(self, t, method=method)

    def S_inverse(self, y) -> float:
        return S_inverse(self, y)

    def level_radius(self, j: int, method: str = "auto") -> float:
        """``R_j = min{ t >= 0 : M(t) = e^j }``."""
        if j <= 0:
            return 0.0
        if self.kind == "powexp" and method == "auto":
            return (j / self.a) ** (1.0 / self.p)
        hi = 1.0
        while self.log_m(hi) < j:
            hi *= 2.0
            if hi > 1e300:
                raise MajorantError(f"M never reaches e^{j}")
        lo = 0.0
        # bisection to the smallest crossing of a nondecreasing function
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.log_m(mid) >= j:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * hi:
                break
        return hi

    def integral_from_zero(self) -> float:
        """``int_0^inf log M(t) / t^2 dt`` (may be infinite)."""
        if self.kind != "table":
            # log M ~ a t^p with p <= 1 near zero: divergent at the origin
            return np.inf
        first = int(np.argmax(self.table_logm > 0))
        t_flat = self.table_t[first - 1]
        return np.inf if t_flat == 0 else S_of(self, t_flat)


def S_of(m: Majorant, t: float, method: str = "auto") -> float:
    """Tail integral ``S(t) = int_t^inf log M(tau) / tau^2 dtau``.

    Closed form for ``exp(a t^p)`` majorants (``a t^(p-1) / (1 - p)``) and,
    cell by cell, for tables; adaptive quadrature when ``method="quad"``.
    """
    if t <= 0:
        raise ValueError("S(t) needs t > 0")
    if m.kind == "powexp":
        if m.p >= 1:
            raise MajorantError("majorant too large: int log M / t^2 diverges")
        if method != "quad":
            return m.a * t ** (m.p - 1.0) / (1.0 - m.p)
        val, _ = integrate.quad(lambda s: float(m.log_m(s)) / s**2, t, np.inf, limit=400,
                                epsabs=0.0, epsrel=1e-12)
        return val
    tt, lm = m.table_t, m.table_logm
    q = m._tail_power
    if q >= 1:
        raise MajorantError("majorant too large: int log M / t^2 diverges")
    t_last = tt[-1]

    def analytic_tail(s):
        return lm[-1] * t_last ** (-q) * s ** (q - 1.0) / (1.0 - q)

    if t >= t_last:
        return float(analytic_tail(t))
    if method == "quad":
        pts = tt[(tt > t) & (tt < t_last)]
        head, _ = integrate.quad(lambda s: float(m.log_m(s)) / s**2, t, t_last,
                                 points=pts[:50] if len(pts) else None, limit=400, epsabs=0.0, epsrel=1e-10)
        return float(head + analytic_tail(t_last))
    # log M is linear on each table cell: int (c0 + c1 s) / s^2 = c0 (1/a - 1/b) + c1 log(b/a)
    nodes = np.concatenate([[t], tt[(tt > t) & (tt < t_last)], [t_last]])
    a, b = nodes[:-1], nodes[1:]
    la, lb = m.log_m(a), m.log_m(b)
    c1 = (lb - la) / (b - a)
    c0 = la - c1 * a
    head = float(np.sum(c0 * (1.0 / a - 1.0 / b) + c1 * np.log(b / a)))
    return float(head + analytic_tail(t_last))


def S_inverse(m: Majorant, y: float) -> float:
    """The t with ``S(t) = y``; closed form for power majorants, bracketing otherwise."""
    if not y > 0:
        raise ValueError("S^{-1} needs y > 0")
    if m.kind == "powexp":
        if m.p >= 1:
            raise MajorantError("majorant too large: int log M / t^2 diverges")
        return (m.a / ((1.0 - m.p) * y)) ** (1.0 / (1.0 - m.p))
    t_lo = m.table_t[1] * 1e-6 if m.kind == "table" else 1e-12
    if y > S_of(m, t_lo):
        raise ValueError(f"y = {y} exceeds S({t_lo}) = {S_of(m, t_lo)}")
    t_hi = 1.0
    while S_of(m, t_hi) > y:
        t_hi *= 2.0
    return optimize.brentq(lambda t: np.log(S_of(m, t)) - np.log(y), t_lo, t_hi, xtol=1e-300, rtol=1e-13)


@dataclass(frozen=True, eq=False)
class FourierDecayFunction:
    """Compactly supported bump g on R^nu with Fourier decay controlled by a majorant.

    ``ghat`` is the finite product of rescaled sinc factors over
    ``k0 <= j <= j_cut``; g itself is reconstructed numerically.
    """

    majorant: Majorant
    epsilon: float
    nu: int
    k0: int
    j_cut: int
    radii: np.ndarray

    @property
    def half_support(self) -> float:
        """``e * sum_j 1/R_j``: g vanishes outside ``[-half_support, half_support]^nu``."""
        return float(E * np.sum(1.0 / self.radii))

    def ghat_1d(self, lam) -> np.ndarray:
        """One axis factor of the Fourier transform."""
        lam = np.asarray(lam, dtype=float)
        out = np.ones_like(lam)
        for R in self.radii:
            out = out * np.sinc(E * lam / (np.pi * R))
        return out

    def ghat(self, lam) -> np.ndarray:
        """Fourier transform at points ``(..., nu)`` (or scalars when nu = 1)."""
        lam = np.asarray(lam, dtype=float)
        if self.nu == 1 and (lam.ndim == 0 or lam.shape[-1] != 1):
            return self.ghat_1d(lam)
        return np.prod(self.ghat_1d(lam), axis=-1)

    def log_abs_bound(self, lam) -> np.ndarray:
        """``log( e M(S^{-1}(eps/e)) / M(||lam||_inf) )``."""
        lam = np.asarray(lam, dtype=float)
        r = np.abs(lam) if (self.nu == 1 and (lam.ndim == 0 or lam.shape[-1] != 1)) else np.abs(lam).max(axis=-1)
        t_star = S_inverse(self.majorant, self.epsilon / E)
        return 1.0 + self.majorant.log_m(t_star) - self.majorant.log_m(r)

    def decay_violations(self, lam) -> int:
        """Number of points where ``|ghat|`` exceeds the decay bound."""
        with np.errstate(divide="ignore"):
            lhs = np.log(np.abs(self.ghat(lam)))
        return int(np.sum(lhs > self.log_abs_bound(lam)))

    def _lambda_grid(self, step: float) -> np.ndarray:
        # integrate until prod_j min(1, R_j / (e lam)) < 1e-18
        def log_bound(lam):
            return np.sum(np.minimum(0.0, np.log(self.radii / (E * lam))))

        lam_max = self.radii[0]
        while log_bound(lam_max) > np.log(1e-18):
            lam_max *= 1.5
        return np.arange(0, int(np.ceil(lam_max / step)) + 1) * step

    def reconstruct(self, xi=None, n_xi: int = 4096):
        """One axis factor g_1 of ``g = g_1 x ... x g_1`` on a grid.

        Discrete inverse transform on a uniform lambda grid whose reciprocal
        period is ``8 eps``, i.e. the result is exact (up to the lambda
        truncation) on ``[-4 eps, 4 eps]``.  Returns ``(xi, g_1(xi))``.
        """
        period = 8.0 * self.epsilon
        step = 2.0 * np.pi / period
        lam = self._lambda_grid(step)
        gh = self.ghat_1d(lam)
        if xi is None:
            xi = (np.arange(n_xi) - n_xi // 2) * (period / n_xi)
        xi = np.asarray(xi, dtype=float)
        out = np.empty(xi.shape)
        flat = xi.ravel()
        res = np.empty(flat.shape)
        for lo in range(0, len(flat), 512):
            blk = flat[lo:lo + 512]
            res[lo:lo + 512] = np.cos(np.outer(blk, lam[1:])) @ gh[1:]
        out = ((gh[0] + 2.0 * res) * step / (2.0 * np.pi)).reshape(xi.shape)
        return xi, out

    def g0(self) -> float:
        """``g(0) = g_1(0)^nu`` from the inverse transform."""
        _, val = self.reconstruct(np.array([0.0]))
        return float(val[0]) ** self.nu

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "nu": self.nu, "k0": self.k0, "j_cut": self.j_cut,
                "half_support": self.half_support, "majorant": self.majorant.describe()}


def _select_k0(m: Majorant, epsilon: float, budget: int) -> int:
    target = epsilon / E
    # S(R_j) is nonincreasing in j: double then bisect
    hi = 1
    while S_of(m, m.level_radius(hi)) > target:
        hi *= 2
        if hi > budget:
            raise MajorantError(f"k0 not found within {budget} levels")
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if S_of(m, m.level_radius(mid)) > target:
            lo = mid
        else:
            hi = mid
    return max(hi, 1)


def build_bump(m: Majorant, epsilon: float, nu: int = 1, j_cut: int | None = None,
               budget: int = 10**7) -> FourierDecayFunction:
    """Construct the bump for majorant ``m`` at support radius ``epsilon``.

    ``k0`` is the first level with ``S(R_k0) <= eps / e``; the product runs over
    ``k0 <= j <= j_cut`` (default ``k0 + 40``).
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    k0 = _select_k0(m, epsilon, budget)
    if j_cut is None:
        j_cut = k0 + 40
    if j_cut < k0 + 8:
        raise ValueError(f"j_cut = {j_cut} < k0 + 8 = {k0 + 8}")
    radii = np.array([m.level_radius(j) for j in range(k0, j_cut + 1)])
    return FourierDecayFunction(majorant=m, epsilon=float(epsilon), nu=int(nu), k0=k0,
                                j_cut=int(j_cut), radii=radii)


def weight_majorant_sum(w: SpectralWeight, m: Majorant) -> float:
    """``K = sum_{retained l} W(l) / M(||l||)``."""
    r = np.arange(w.cutoff + 1)
    t = 2 * np.pi * r
    logs = np.log(w(t)) - m.log_m(t)
    return float(np.sum(shell_count(r, w.nu) * np.exp(logs)))


def majorant_weight(m: Majorant, nu: int = 1, cutoff: int | None = None) -> SpectralWeight:
    """``W(2 pi n) = M(2 pi ||n||) / (1 + ||n||^2)``, the weight for which K is a plain sum of 1/(1 + n^2)."""

    def func(t):
        t = np.asarray(t, dtype=float)
        return np.exp(m.log_m(t)) / (1.0 + (t / (2.0 * np.pi)) ** 2)

    w = SpectralWeight.from_function(func, nu=nu, cutoff=cutoff, name="ratio")
    w.params.update({"majorant": m.describe()})
    return w


def epsilon_max(m: Majorant) -> float:
    """Largest admissible epsilon: ``min(1/2, (e/2) int_0^inf log M / t^2)``."""
    return float(min(0.5, 0.5 * E * m.integral_from_zero()))


def _check_epsilon(m, epsilon):
    emax = epsilon_max(m)
    if not 0 < epsilon <= emax:
        raise ValueError(f"epsilon = {epsilon} violates 0 < epsilon <= min(1/2, (e/2) int log M/t^2) = {emax}")


def _karhunen_parts(w: SpectralWeight, m: Majorant, epsilon: float, j_cut=None):
    _check_epsilon(m, epsilon)
    K = weight_majorant_sum(w, m)
    if not np.isfinite(K):
        raise ValueError("K = sum W/M is not finite")
    m1 = m.sqrt()
    bump = build_bump(m1, epsilon, w.nu, j_cut=j_cut)
    t_max = 2 * np.pi * w.cutoff
    if j_cut is None and bump.radii[-1] < t_max:
        # keep the decay bound valid on every retained mode
        j_need = int(np.ceil(m1.log_m(t_max))) + 1
        bump = build_bump(m1, epsilon, w.nu, j_cut=max(j_need, bump.k0 + 40))
    n = np.arange(-w.cutoff, w.cutoff + 1)
    gh1 = bump.ghat_1d(2 * np.pi * n)
    modes = mode_grid(w.nu, w.cutoff)
    idx = modes + w.cutoff
    gh = np.prod(gh1[idx], axis=1)
    denom = float(np.sum(gh**2 * w.mode_weights(modes)))
    return bump.g0(), denom, bump, K


def karhunen_lower_bound(w: SpectralWeight, m: Majorant, epsilon: float, j_cut=None) -> float:
    """Variational quotient ``g(0)^2 / sum_l |g^(l)|^2 W(l)`` for the bump built from ``sqrt(M)``.

    The sum runs over the retained modes of ``w``.
    """
    g0, denom, _, _ = _karhunen_parts(w, m, epsilon, j_cut)
    return g0**2 / denom


def var_bound(w: SpectralWeight, m: Majorant, epsilon: float, nu: int | None = None) -> float:
    """Closed-form lower bound ``1 / (e^2 4^nu K eps^(2 nu) M(S^{-1}(2 eps / e)))``."""
    nu = w.nu if nu is None else nu
    _check_epsilon(m, epsilon)
    K = weight_majorant_sum(w, m)
    t_star = S_inverse(m, 2.0 * epsilon / E)
    log_den = 2.0 + 2 * nu * np.log(2.0) + np.log(K) + 2 * nu * np.log(epsilon) + float(m.log_m(t_star))
    return float(np.exp(-log_den))


def _grid_offsets(nu, grid_n):
    axes = np.meshgrid(*[np.arange(grid_n)] * nu, indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1)


def conditional_variance_grid(w: SpectralWeight, center, epsilon: float, grid_n: int,
                              jitter: float = 1e-10, observe: bool = True) -> float:
    """Variance of ``v(center)`` given v on the grid points at distance >= epsilon.

    The grid is ``center + {k / grid_n}^nu``.  ``jitter`` is added to the
    diagonal of the observation covariance relative to the unconditional
    variance.  With ``observe=False`` nothing is observed.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the observation covariance is numerically singular.
    """
    if grid_n < 4:
        raise ValueError("grid_n must be >= 4")
    if jitter < 0:
        raise ValueError("jitter must be >= 0")
    as_point(center, w.nu)
    nu = w.nu
    k = _grid_offsets(nu, grid_n)
    table = covariance_table(w, k / grid_n)
    var0 = table[0]
    lag_dist = np.minimum(k, grid_n - k).max(axis=1) / grid_n
    obs = np.nonzero(lag_dist >= epsilon)[0] if observe else np.array([], dtype=int)
    if len(obs) == 0:
        return float(var0)
    ko = k[obs]
    diff = (ko[:, None, :] - ko[None, :, :]) % grid_n
    flat = np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), (grid_n,) * nu)
    C = table[flat] + jitter * var0 * np.eye(len(obs))
    r = table[obs]
    try:
        cf = linalg.cho_factor(C, lower=True)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"observation covariance is ill-conditioned ({len(obs)} points); "
            f"increase jitter (currently {jitter})") from exc
    cond = var0 - r @ linalg.cho_solve(cf, r)
    return float(max(cond, 0.0))


@dataclass
class VarianceReport:
    epsilon: float
    grid_upper: float
    karhunen_lower: float
    paper_bound: float
    cutoff: int
    jitter: float
    grid_n: int = 0
    slack: float = 0.05
    extra: dict = field(default_factory=dict)

    @property
    def chain_ok(self) -> bool:
        s = 1.0 + self.slack
        return self.paper_bound <= s * self.karhunen_lower and self.karhunen_lower <= s * self.grid_upper

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "grid_upper": self.grid_upper,
                "karhunen_lower": self.karhunen_lower, "paper_bound": self.paper_bound,
                "cutoff": self.cutoff, "jitter": self.jitter, "grid_n": self.grid_n,
                "slack": self.slack, "chain_ok": self.chain_ok, **self.extra}


def variance_report(w: SpectralWeight, m: Majorant, epsilon: float, grid_n: int = 256,
                    jitter: float = 1e-10, slack: float = 0.05) -> VarianceReport:
    """All three estimates of V(epsilon) side by side."""
    g0, denom, bump, K = _karhunen_parts(w, m, epsilon)
    return VarianceReport(
        epsilon=float(epsilon),
        grid_upper=conditional_variance_grid(w, np.zeros(w.nu), epsilon, grid_n, jitter),
        karhunen_lower=g0**2 / denom,
        paper_bound=var_bound(w, m, epsilon),
        cutoff=w.cutoff, jitter=jitter, grid_n=grid_n, slack=slack,
        extra={"K": K, "k0": bump.k0, "j_cut": bump.j_cut},
    )


def fit_eta(curve) -> float:
    """Slope of ``log log(1/V)`` against ``log(1/eps)``.

    ``curve`` is a sequence of ``(eps, V)`` with eps decreasing and
    ``0 < V < 1``.
    """
    arr = np.asarray(curve, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 4:
        raise ValueError("need at least four (epsilon, variance) points")
    eps, V = arr[:, 0], arr[:, 1]
    if np.any(V <= 0):
        raise ValueError("variances must be positive")
    if np.any(V >= 1):
        raise ValueError("variances must be below 1; normalise by the unconditional variance")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be strictly decreasing")
    slope, _ = np.polyfit(np.log(1.0 / eps), np.log(np.log(1.0 / V)), 1)
    return float(slope)


def measured_eta(w: SpectralWeight, eps_list, grid_n: int = 256, jitter: float = 1e-10):
    """Fit eta to the grid conditional variance relative to the unconditional one.

    Returns ``(eta_hat, curve)``.
    """
    var0 = w.variance()
    curve = [(float(e), conditional_variance_grid(w, np.zeros(w.nu), e, grid_n, jitter) / var0)
             for e in sorted(eps_list, reverse=True)]
    return fit_eta(curve), curve
