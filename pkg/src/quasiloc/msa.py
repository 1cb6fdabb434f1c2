"""
Multiscale-analysis bookkeeping on finite windows.

The induction itself cannot be run at desk scale; what can be checked is its
input.  For a scale ladder ``L_{k+1} = floor(L_k^gamma)`` the two hypotheses are

(1) (E, L_k)-resonant L_{k+1}-rectangles are J-sparse in every L_{k+2}-rectangle
    and 2-sparse in ``[-L_{k+2}, L_{k+2}]^d``;
(2) E-singular L_0-rectangles are J-sparse in every L_1-rectangle.

"For every E" becomes a finite energy grid and "for every omega" a finite
sample of phases.  Each rectangle's restriction is diagonalised once and the
verdicts for all energies are read off the eigenvalues, so the grid size is
nearly free.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .hull import sample_hull
from .lattice import Box, LRectangle, are_disjoint, as_region, centered_box, enumerate_rectangles
from .operator import (FiniteOperator, OperatorConfig, b2_family, boundary_pairs, is_regular,
                       regularity_threshold, resolvent_identity_residual, resonance_threshold)

__all__ = [
    "MsaParams",
    "param_violations",
    "ScaleLadder",
    "SparsityResult",
    "MsaCertificate",
    "CensusReport",
    "DecayReport",
    "scale_sequence",
    "sparsity_scan",
    "max_disjoint",
    "energy_grid",
    "check_msa_assumptions",
    "resonance_census",
    "eigen_decay",
    "median_mass",
]


def param_violations(m=1.0, b=0.5, gamma=1.6, J=2, L0=10, r=0.5) -> list[str]:
    """Broken constraints among the MSA parameters, as messages."""
    out = []
    if not m > 0:
        out.append("m must be positive")
    if not 0 < b < 1:
        out.append("b must lie in (0, 1)")
    elif not gamma > 2 - b:
        out.append(f"gamma must exceed 2 − b = {2 - b:g}")
    if int(J) != J or J < 1:
        out.append("J must be an integer >= 1")
    if int(L0) != L0 or L0 < 2:
        out.append("L0 must be an integer >= 2")
    if not r > 0:
        out.append("r must be positive")
    return out


@dataclass(frozen=True)
class MsaParams:
    """Parameters of the multiscale analysis."""

    m: float = 1.0
    b: float = 0.5
    gamma: float = 1.6
    J: int = 2
    L0: int = 10
    r: float = 0.5

    def violations(self) -> list[str]:
        return param_violations(self.m, self.b, self.gamma, self.J, self.L0, self.r)

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(bad))


@dataclass(frozen=True)
class ScaleLadder:
    scales: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scale ladder must be strictly increasing")

    def __getitem__(self, k):
        return self.scales[k]

    def __len__(self):
        return len(self.scales)

    def __iter__(self):
        return iter(self.scales)


def scale_sequence(L0: int, gamma: float, k_max: int, cap: int | None = None) -> ScaleLadder:
    """``[L_0, ..., L_{k_max}]`` with ``L_{k+1} = floor(L_k^gamma)``.

    Stops early (before appending) when a scale would exceed ``cap``.
    """
    if L0 < 2:
        raise ValueError("L0 must be >= 2")
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    scales = [int(L0)]
    for _ in range(k_max):
        nxt = math.floor(scales[-1] ** gamma)
        if nxt <= scales[-1]:
            nxt = scales[-1] + 1  # float floor can stall for gamma barely above 1
        if cap is not None and nxt > cap:
            break
        scales.append(nxt)
    return ScaleLadder(tuple(scales))


# ---------------------------------------------------------------- sparsity

@dataclass
class SparsityResult:
    passed: bool
    witness: list
    n_bad: int

    def to_dict(self) -> dict:
        return {"passed": self.passed, "n_bad": self.n_bad,
                "witness": [_box_of(r).to_list() for r in self.witness]}


def _box_of(r) -> Box:
    return r.box if isinstance(r, LRectangle) else r


def _greedy_intervals(boxes: list[Box], J: int) -> list[int]:
    # d = 1: earliest-right-endpoint greedy is an exact maximum disjoint set
    order = sorted(range(len(boxes)), key=lambda i: boxes[i].intervals[0][1])
    chosen, right = [], -np.inf
    for i in order:
        a, b = boxes[i].intervals[0]
        if a > right:
            chosen.append(i)
            right = b
            if len(chosen) == J:
                break
    return chosen


def _dfs_disjoint(boxes: list[Box], J: int) -> list[int]:
    n = len(boxes)
    lo = np.array([b.lower for b in boxes])
    hi = np.array([b.upper for b in boxes])
    # disjoint[i, j]: separated along some axis
    disjoint = np.any((lo[:, None, :] > hi[None, :, :]) | (lo[None, :, :] > hi[:, None, :]), axis=2)

    def search(chosen, cand):
        if len(chosen) == J:
            return chosen
        if len(chosen) + len(cand) < J:
            return None
        for pos, i in enumerate(cand):
            if len(chosen) + len(cand) - pos < J:
                return None
            rest = [j for j in cand[pos + 1:] if disjoint[i, j]]
            found = search(chosen + [i], rest)
            if found is not None:
                return found
        return None

    return search([], list(range(n))) or []


def max_disjoint(rects: Sequence, J: int) -> list:
    """Up to J pairwise disjoint members of ``rects`` (exact: fewer means none exist)."""
    boxes = [_box_of(r) for r in rects]
    if not boxes or J < 1:
        return []
    if boxes[0].d == 1:
        idx = _greedy_intervals(boxes, J)
    else:
        # greedy on the first axis gives a quick hit before the exact search
        quick = _greedy_intervals(boxes, J)
        if len(quick) == J and all(are_disjoint(boxes[a], boxes[b]) for a in quick for b in quick if a < b):
            idx = quick
        else:
            idx = _dfs_disjoint(boxes, J)
    return [rects[i] for i in idx]


def sparsity_scan(window: Box | None, rects: Sequence, bad, J: int) -> SparsityResult:
    """Is the family of bad rectangles inside ``window`` J-sparse?

    ``bad`` is a predicate on rectangles or a boolean sequence aligned with
    ``rects``.  Fails iff J pairwise disjoint bad rectangles exist; the
    witness lists them.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    flags = [bad(r) for r in rects] if callable(bad) else list(bad)
    chosen = [r for r, f in zip(rects, flags)
              if f and (window is None or window.contains_box(_box_of(r)))]
    wit = max_disjoint(chosen, J)
    if len(wit) < J:
        return SparsityResult(True, [], len(chosen))
    return SparsityResult(False, wit, len(chosen))


# ---------------------------------------------------------------- energies

def energy_grid(eigenvalues, n_fill: int = 32, pad: float = 0.5, midpoints: bool = True) -> np.ndarray:
    """Spectrum-adapted energies: eigenvalues, their midpoints and a uniform fill."""
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    parts = [ev]
    if midpoints and len(ev) > 1:
        parts.append(0.5 * (ev[1:] + ev[:-1]))
    if n_fill > 0 and len(ev):
        parts.append(np.linspace(ev[0] - pad, ev[-1] + pad, n_fill))
    return np.unique(np.concatenate(parts))


# ---------------------------------------------------------------- certificate

class _WindowField:
    """Potential on a window, evaluated once; restrictions read from it."""

    chunk_bytes = 2**26

    def __init__(self, cfg: OperatorConfig, window: Box):
        self.window = window
        self.pot = cfg.potential(window.sites())
        self.g = cfg.g
        self._eig = {}

    def operator(self, region) -> FiniteOperator:
        region = as_region(region)
        sites = region.sites()
        return FiniteOperator(sites, self.pot[self.window.index_of(sites)], g=self.g, region=region)

    def eigenvalues(self, region) -> np.ndarray:
        key = str(region)
        if key not in self._eig:
            self._eig[key] = self.operator(region).eigenvalues
        return self._eig[key]

    def batched(self, boxes: list[Box], vectors: bool = False):
        """Eigen-decompositions of many equal-shape boxes via stacked LAPACK calls."""
        if not boxes:
            return []
        shape = boxes[0].shape
        template = self.operator(Box(tuple((0, n - 1) for n in shape)))
        adj = template.matrix - np.diag(template.potential)
        local = boxes[0].sites() - boxes[0].lower
        n = len(local)
        step = max(1, self.chunk_bytes // (8 * n * n))
        out = []
        for c in range(0, len(boxes), step):
            part = boxes[c:c + step]
            idx = np.stack([self.window.index_of(local + bx.lower) for bx in part])
            mats = np.broadcast_to(adj, (len(part), n, n)).copy()
            mats[:, np.arange(n), np.arange(n)] = self.pot[idx]
            if vectors:
                lam, vec = np.linalg.eigh(mats)
                out += list(zip(lam, vec))
            else:
                lam = np.linalg.eigvalsh(mats)
                for bx, ev in zip(part, lam):
                    self._eig[str(bx)] = ev
                out += list(lam)
        return out


def _default_stride(L: int) -> int:
    return max(1, L // 4)


def _spectral_dist(ev: np.ndarray, energies: np.ndarray) -> np.ndarray:
    if len(ev) == 1:
        return np.abs(energies - ev[0])
    pos = np.clip(np.searchsorted(ev, energies), 1, len(ev) - 1)
    return np.minimum(np.abs(energies - ev[pos - 1]), np.abs(energies - ev[pos]))


def _resonant_flags(field_: _WindowField, rects, L: int, energies, params: MsaParams,
                    n_random: int, seed: int) -> tuple[np.ndarray, list]:
    """(n_rect, n_E) flags for (E, L)-resonance of each rectangle."""
    th = resonance_threshold(L, params.m, params.b, params.J)
    dmin = 1.0 / th
    flags = np.zeros((len(rects), len(energies)), dtype=bool)
    wits = [dict() for _ in rects]
    spectra = field_.batched([R.box for R in rects])
    for i, (R, evR) in enumerate(zip(rects, spectra)):
        # every H_s with s inside R is a compression of H_R, so its spectrum
        # lies in [min sigma(H_R), max sigma(H_R)]; energies outside that range
        # by dmin or more cannot be resonant for any s
        todo = (energies > evR[0] - dmin) & (energies < evR[-1] + dmin)
        if not todo.any():
            continue
        for s in b2_family(R.box, L, _default_stride(L), n_random=n_random, seed=seed):
            ev = evR if s == R.box else field_.eigenvalues(s)
            hit = (_spectral_dist(ev, energies) < dmin) & ~flags[i]
            for e in np.nonzero(hit)[0]:
                wits[i][int(e)] = str(s)
            flags[i] |= hit
            if flags[i][todo].all():
                break
    return flags, wits


def _singular_flags(field_: _WindowField, rects, energies, params: MsaParams) -> np.ndarray:
    """(n_rect, n_E) flags for E-singularity of each rectangle."""
    flags = np.zeros((len(rects), len(energies)), dtype=bool)
    eps = np.finfo(float).eps
    for axis in sorted({R.short_axis for R in rects}):
        which = [i for i, R in enumerate(rects) if R.short_axis == axis]
        decomp = field_.batched([rects[i].box for i in which], vectors=True)
        R0 = rects[which[0]]
        inner, pi, pj = boundary_pairs(R0)
        local = R0.box.index_of(inner)
        ri, rj = local[pi], local[pj]
        th = regularity_threshold(R0.L, params.m, params.b)
        for i, (lam, vec) in zip(which, decomp):
            if len(pi) == 0:
                continue
            prod = vec[ri] * vec[rj]
            dist = _spectral_dist(lam, energies)
            with np.errstate(all="ignore"):
                G = np.abs((1.0 / (lam[None, :] - energies[:, None])) @ prod.T).max(axis=1)
                # backward error n eps ||H|| of the eigensolver moves G by at most
                # that times ||G||^2; only verdicts it could flip are re-solved
                err = 64 * len(lam) * eps * (np.abs(lam).max() + np.abs(energies) + 1.0) / dist**2
            flags[i] = ~np.isfinite(G) | (G > th)
            fuzzy = ~np.isfinite(G) | (np.abs(G - th) <= err)
            if fuzzy.any():
                op = field_.operator(rects[i].box)
                for e in np.nonzero(fuzzy)[0]:
                    flags[i, e] = not is_regular(op, rects[i], float(energies[e]), params.m, params.b).is_regular
    return flags


@dataclass
class MsaCertificate:
    params: MsaParams
    window: Box
    E_grid: list
    omega_samples: list
    ladder: list
    verdicts: list = field(default_factory=list)
    cross_checks: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def failures(self) -> list:
        return [v for v in self.verdicts if not v["passed"]]

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "window": self.window.to_list(),
            "ladder": list(self.ladder),
            "E_grid": [float(e) for e in self.E_grid],
            "omega_samples": [[float(x) for x in np.atleast_1d(w)] for w in self.omega_samples],
            "overall": self.overall,
            "verdicts": self.verdicts,
            "cross_checks": self.cross_checks,
        }

    def witness_rows(self) -> list[dict]:
        rows = []
        for v in self.failures():
            for j, w in enumerate(v["witness"]):
                rows.append({"omega_index": v["omega_index"], "E": v["E"], "k": v["k"],
                             "assumption": v["assumption"], "region": v["region"],
                             "member": j, "rectangle": w})
        return rows


def _verdict(assumption, k, iw, E, region, res: SparsityResult, scale, detail=None):
    out = {"assumption": assumption, "k": k, "omega_index": iw, "E": float(E), "scale": scale,
           "region": _box_of(region).to_list() if region is not None else None,
           "passed": res.passed, "n_bad": res.n_bad,
           "witness": [_box_of(r).to_list() for r in res.witness]}
    if detail:
        out["detail"] = detail
    return out


def _containers(rects, outers):
    """For each outer rectangle, the indices of rects it contains."""
    lo = np.array([r.box.lower for r in rects])
    hi = np.array([r.box.upper for r in rects])
    return [np.nonzero(np.all(lo >= o.box.lower, axis=1) & np.all(hi <= o.box.upper, axis=1))[0]
            for o in outers]


def _sparsity_verdicts(assumption, k, iw, energies, rects, flags, outers, J, scale, witnesses=None):
    out = []
    inside = _containers(rects, outers)
    for e, E in enumerate(energies):
        bad = flags[:, e]
        worst = None
        for o, idx in zip(outers, inside):
            sel = idx[bad[idx]]
            if len(sel) < J:
                continue
            res = sparsity_scan(None, [rects[i] for i in sel], [True] * len(sel), J)
            if not res.passed:
                worst = (o, res)
                break
        n_bad = int(bad.sum())
        if worst is None:
            out.append(_verdict(assumption, k, iw, E, None, SparsityResult(True, [], n_bad), scale))
        else:
            o, res = worst
            detail = None
            if witnesses is not None:
                lookup = {id(r): i for i, r in enumerate(rects)}
                detail = [witnesses[lookup[id(r)]].get(e) for r in res.witness]
            out.append(_verdict(assumption, k, iw, E, o, res, scale, detail))
    return out


def _check_one_omega(cfg: OperatorConfig, iw: int, window: Box, ladder, energies, params: MsaParams,
                     k_max: int, strides, n_random: int, seed: int) -> tuple[list, dict]:
    field_ = _WindowField(cfg, window)
    verdicts = []
    J = params.J
    d = window.d
    for k in range(k_max + 1):
        Lk, L1, L2 = ladder[k], ladder[k + 1], ladder[k + 2]
        rects = enumerate_rectangles(window, L1, strides.get(L1, _default_stride(L1)))
        flags, wits = _resonant_flags(field_, rects, Lk, energies, params, n_random, seed + k)
        outers = enumerate_rectangles(window, L2, strides.get(L2, _default_stride(L2)))
        verdicts += _sparsity_verdicts("1-J", k, iw, energies, rects, flags, outers, J, L1, wits)
        box = centered_box(L2, d)
        if window.contains_box(box):
            inside = np.nonzero(box.contains(np.array([r.box.lower for r in rects]))
                                & box.contains(np.array([r.box.upper for r in rects])))[0]
            sub = [rects[i] for i in inside]
            for e, E in enumerate(energies):
                res = sparsity_scan(None, sub, flags[inside, e], 2)
                verdicts.append(_verdict("1-box", k, iw, E, box, res, L1))
    L0, L1 = ladder[0], ladder[1]
    rects0 = enumerate_rectangles(window, L0, strides.get(L0, _default_stride(L0)))
    flags0 = _singular_flags(field_, rects0, energies, params)
    outers1 = enumerate_rectangles(window, L1, strides.get(L1, _default_stride(L1)))
    verdicts += _sparsity_verdicts("2", 0, iw, energies, rects0, flags0, outers1, J, L0)

    # resolvent-identity spot check on one L0-rectangle nested in an L1-rectangle
    checks = {}
    outer = outers1[len(outers1) // 2]
    inner = LRectangle.at(tuple(outer.box.lower + 1), L0, 0)
    if outer.box.contains_box(inner.box):
        op = field_.operator(outer.box)
        ev = op.eigenvalues
        E = float(ev[0] - 0.5) if len(ev) else 0.0
        pts = inner.box.sites()
        checks["resolvent_identity_residual"] = resolvent_identity_residual(
            op, inner.box, E, tuple(pts[0]), tuple(pts[-1]))
    return verdicts, checks


def check_msa_assumptions(params: MsaParams, config: OperatorConfig, E_grid, omega_samples=None,
                          k_max: int = 0, window: Box | None = None, strides: dict | None = None,
                          n_random: int = 4, seed: int = 0, threads: int = 1,
                          scale_cap: int | None = None) -> MsaCertificate:
    """Finite-window check of the two MSA hypotheses.

    Parameters
    ----------
    params : MsaParams
    config : OperatorConfig
        The operator; its omega is always among the sampled phases.
    E_grid : sequence of float
    omega_samples : sequence of torus points, optional
        Additional phases.
    k_max : int
        Highest level k for hypothesis (1); needs scales up to ``L_{k_max+2}``.
    window : Box, optional
        Defaults to ``[-L_{k_max+2}, L_{k_max+2}]^d``.
    strides : dict, optional
        Corner stride per scale (default ``max(1, L // 4)``).

    Raises
    ------
    ValueError
        If the ladder (or window) does not reach ``L_{k_max+2}``; the message
        names the largest feasible ``k_max``.
    """
    ladder = scale_sequence(params.L0, params.gamma, k_max + 2, cap=scale_cap)
    d = config.d
    if window is None and len(ladder) == k_max + 3:
        window = centered_box(ladder[k_max + 2], d)
    fits = [k for k in range(len(ladder) - 2)
            if window is not None and all(n >= 2 * ladder[k + 2] + 1 if d > 1 else n >= ladder[k + 2] + 1
                                          for n in window.shape)]
    feasible = max(fits) if fits else -1
    if len(ladder) < k_max + 3 or feasible < k_max:
        raise ValueError(f"scale ladder exceeds the window; maximum feasible k_max = {feasible}")
    energies = np.asarray(sorted(set(float(e) for e in E_grid)), dtype=float)
    omegas = [config.omega] + [np.atleast_1d(np.asarray(w, dtype=float)) for w in (omega_samples or [])]
    strides = dict(strides or {})

    def task(iw):
        return _check_one_omega(config.with_omega(omegas[iw]), iw, window, ladder.scales, energies,
                                params, k_max, strides, n_random, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(task, range(len(omegas))))
    else:
        results = [task(i) for i in range(len(omegas))]
    cert = MsaCertificate(params=params, window=window, E_grid=list(energies),
                          omega_samples=[w.tolist() for w in omegas], ladder=list(ladder.scales))
    for v, c in results:
        cert.verdicts += v
        for key, val in c.items():
            cert.cross_checks[key] = max(cert.cross_checks.get(key, 0.0), val)
    return cert


# ---------------------------------------------------------------- census

@dataclass
class CensusReport:
    ks: list
    frequencies: list
    max_counts: list
    delta: float
    n_subsets: int
    log_slope: float

    def to_dict(self) -> dict:
        return asdict(self)


def _max_overlap(spectra: list[np.ndarray], delta: float, energies=None) -> int:
    """Largest number of spectra simultaneously within ``delta`` of one energy."""
    if energies is not None:
        energies = np.asarray(energies, dtype=float)
        count = np.zeros(len(energies), dtype=int)
        for ev in spectra:
            pos = np.clip(np.searchsorted(ev, energies), 1, max(len(ev) - 1, 1))
            dist = np.minimum(np.abs(energies - ev[pos - 1]), np.abs(energies - ev[pos]))
            count += dist < delta
        return int(count.max()) if len(count) else 0
    # exact over all real E: merge each spectrum's open delta-neighbourhood
    # into disjoint intervals, then sweep endpoints
    events = []
    for ev in spectra:
        ev = np.sort(ev)
        starts, ends = ev - delta, ev + delta
        breaks = np.nonzero(starts[1:] >= ends[:-1])[0]
        s = np.concatenate([[starts[0]], starts[breaks + 1]])
        e = np.concatenate([ends[breaks], [ends[-1]]])
        events += [(x, 1) for x in s] + [(x, -1) for x in e]
    events.sort(key=lambda t: (t[0], t[1]))  # open intervals: close before opening at a tie
    best = cur = 0
    for _, step in events:
        cur += step
        best = max(best, cur)
    return best


def resonance_census(config: OperatorConfig, L: int, params: MsaParams, k_values=(1, 2, 3),
                     n_samples: int = 100, seed: int = 0, energies=None, n_subsets: int | None = None,
                     threads: int = 1) -> CensusReport:
    """Empirical frequency that k disjoint L-rectangles are resonant at one common E.

    A rectangle s is resonant at E when ``dist(E, sigma(H_s)) < g exp(-L^r)``,
    i.e. ``||G_E[H_s]|| > exp(L^r) / g``.  ``n_subsets`` adjacent disjoint
    rectangles are laid out along the first axis; a sample counts for k when
    some E (any real E, or one from ``energies`` if given) makes at least k of
    them resonant.  The hull is resampled with seeds ``seed, seed+1, ...``.
    """
    ks = sorted(int(k) for k in k_values)
    if ks[0] < 1:
        raise ValueError("k must be >= 1")
    n_subsets = max(ks) if n_subsets is None else n_subsets
    g = config.g
    delta = abs(g) * math.exp(-L**params.r) if g != 0 else math.exp(-L**params.r)
    d = config.d
    boxes = [LRectangle.at((i * (L + 1),) + (0,) * (d - 1), L, 0).box for i in range(n_subsets)]

    def one(i):
        cfg = config
        if config.hull is not None:
            cfg = OperatorConfig(config.omega, config.alpha, sample_hull(config.hull.weight, seed + i),
                                 config.g, config.d)
        spectra = [cfg.operator(b).eigenvalues for b in boxes]
        return _max_overlap(spectra, delta, energies)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            counts = list(ex.map(one, range(n_samples)))
    else:
        counts = [one(i) for i in range(n_samples)]
    counts_arr = np.array(counts)
    freq = [float(np.mean(counts_arr >= k)) for k in ks]
    pos = [(k, f) for k, f in zip(ks, freq) if f > 0]
    slope = float(np.polyfit([k for k, _ in pos], np.log([f for _, f in pos]), 1)[0]) if len(pos) >= 2 else float("nan")
    return CensusReport(ks=ks, frequencies=freq, max_counts=[int(c) for c in counts], delta=delta,
                        n_subsets=n_subsets, log_slope=slope)


# ---------------------------------------------------------------- decay

@dataclass
class DecayReport:
    eigenvalue: float
    fitted_mass: float
    residual: float
    profile: list
    center: tuple = ()
    n_fit: int = 0

    def to_dict(self) -> dict:
        return {"eigenvalue": self.eigenvalue, "fitted_mass": self.fitted_mass,
                "residual": self.residual, "center": list(self.center), "n_fit": self.n_fit,
                "profile": [list(p) for p in self.profile]}


def _select(ev: np.ndarray, selector) -> int:
    if isinstance(selector, (int, np.integer)):
        if not -len(ev) <= selector < len(ev):
            raise ValueError(f"no eigenvalue with index {selector}")
        return int(selector) % len(ev)
    lo, hi = selector
    inside = np.nonzero((ev >= lo) & (ev <= hi))[0]
    if len(inside) == 0:
        raise ValueError(f"no eigenvalue in [{lo}, {hi}]")
    return int(inside[np.argmin(np.abs(ev[inside] - 0.5 * (lo + hi)))])


def eigen_decay(H: FiniteOperator, selector, center=None, edge: int = 5,
                floor: float = 1e-12) -> DecayReport:
    """Exponential decay rate of one eigenvector.

    ``selector`` is an eigenvalue index or an ``(lo, hi)`` window (the
    eigenvalue nearest its midpoint is used).  Shells are l1 spheres around
    ``center`` (default: the site of largest modulus).  The mass is the
    least-squares slope of ``-log max_shell |psi|`` against the radius, using
    only sites at least ``edge`` sites deep inside the box and shells above
    ``floor``.
    """
    lam, vec = H.eigh
    i = _select(lam, selector)
    psi = np.abs(vec[:, i])
    psi = psi / np.linalg.norm(psi)
    c = H.sites[int(np.argmax(psi))] if center is None else np.atleast_1d(np.asarray(center, dtype=int))
    radius = np.abs(H.sites - c).sum(axis=1)
    nr = int(radius.max()) + 1
    prof = np.zeros(nr)
    np.maximum.at(prof, radius, psi)
    lo, hi = H.sites.min(axis=0), H.sites.max(axis=0)
    depth = np.minimum(H.sites - lo, hi - H.sites).min(axis=1)
    deep = depth >= edge
    fit_prof = np.zeros(nr)
    np.maximum.at(fit_prof, radius[deep], psi[deep])
    r = np.nonzero(fit_prof > floor)[0]
    mass, resid = float("nan"), float("nan")
    if len(r) >= 2:
        y = -np.log(fit_prof[r])
        coef = np.polyfit(r, y, 1)
        mass = float(coef[0])
        resid = float(np.sqrt(np.mean((y - np.polyval(coef, r)) ** 2)))
    profile = [(int(k), float(prof[k])) for k in range(nr)]
    return DecayReport(eigenvalue=float(lam[i]), fitted_mass=mass, residual=resid, profile=profile,
                       center=tuple(int(v) for v in c), n_fit=len(r))


def median_mass(H: FiniteOperator, indices) -> float:
    """Median fitted mass over the given eigenvector indices."""
    return float(np.median([eigen_decay(H, int(i)).fitted_mass for i in indices]))
