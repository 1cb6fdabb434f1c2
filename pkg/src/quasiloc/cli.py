"""
Command-line driver: ``quasiloc <subcommand> [flags]``.

Every subcommand reads an optional JSON config (``--config``), lets flags
override its keys, validates the merged config, and writes ``<out>/<cmd>.csv``
plus ``<out>/<cmd>.json``.  The JSON embeds the resolved config.  CSV files use
LF line endings and 17 significant digits, so reruns with the same config and
seed are byte-identical.

Exit status: 0 on success, 2 on a validation error, 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .hull import SpectralWeight, eval_on_grid, holder_estimate, sample_hull
from .interp import Majorant, MajorantError, build_bump, majorant_weight, measured_eta, variance_report
from .lattice import Box, centered_box
from .msa import MsaParams, check_msa_assumptions, param_violations, eigen_decay, energy_grid, scale_sequence
from .operator import MAX_SITES, OperatorConfig, ResonantEnergyError, combes_thomas_bound, green
from .torus import ResonantFrequencyError, diophantine_profile

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

SUBCOMMANDS = ("dioph", "hull", "variance", "bump", "spectrum", "green", "msa", "decay", "sweep")

REQUIRED = {
    "dioph": ("alpha", "lmax"),
    "hull": ("weight", "seed"),
    "variance": ("weight", "majorant", "eps_list"),
    "bump": ("majorant", "eps"),
    "spectrum": ("box", "alpha", "omega", "g"),
    "green": ("box", "alpha", "omega", "g", "E", "pairs"),
    "msa": ("alpha", "omega", "g", "msa", "E_grid"),
    "decay": ("box", "alpha", "omega", "g"),
    "sweep": ("box", "alpha", "omega", "g_list", "weight", "seed"),
}

DEFAULTS = {
    "cutoff": None,
    "grid": None,
    "jitter": 1e-10,
    "kappa": 0.5,
    "jcut": None,
    "k_max": 0,
    "n_random": 4,
    "n_fill": 32,
    "indices": None,
    "omega_samples": [],
    "window": None,
    "fitted_A": None,
    "threads": 1,
}

KNOWN_KEYS = set(DEFAULTS) | {k for keys in REQUIRED.values() for k in keys} | {
    "d", "nu", "out", "command",
}


class Issue(NamedTuple):
    level: str  # "error" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


# ------------------------------------------------------------------ parsing helpers

def _floats(v) -> list[float]:
    if isinstance(v, str):
        return [float(x) for x in v.replace(";", ",").split(",") if x.strip()]
    return [float(x) for x in np.atleast_1d(np.asarray(v, dtype=float)).ravel()]


def parse_box(v) -> Box:
    """``"a:b,c:d"`` or ``[[a, b], [c, d]]``."""
    if isinstance(v, Box):
        return v
    if isinstance(v, str):
        ivs = []
        for part in v.split(","):
            a, b = part.split(":")
            ivs.append((int(a), int(b)))
        return Box(tuple(ivs))
    return Box(tuple((int(a), int(b)) for a, b in v))


def parse_site(v) -> tuple[int, ...]:
    if isinstance(v, str):
        return tuple(int(x) for x in v.split(","))
    return tuple(int(x) for x in np.atleast_1d(v))


def parse_pairs(v) -> list:
    """``"x/y;x/y"`` with comma-separated coordinates, or ``[[x, y], ...]``."""
    if isinstance(v, str):
        out = []
        for item in v.split(";"):
            if item.strip():
                x, y = item.split("/")
                out.append((parse_site(x), parse_site(y)))
        return out
    return [(parse_site(x), parse_site(y)) for x, y in v]


def parse_weight(spec: str, nu: int, cutoff=None) -> SpectralWeight:
    """``exp:C:zeta``, ``power:c:delta`` or ``ratio:<majorant spec>``."""
    kind, _, rest = str(spec).partition(":")
    if kind == "exp":
        C, zeta = (float(x) for x in rest.split(":"))
        return SpectralWeight.exponential(C, zeta, nu=nu, cutoff=cutoff)
    if kind == "power":
        c, delta = (float(x) for x in rest.split(":"))
        return SpectralWeight.power(c, delta, nu=nu, cutoff=cutoff)
    if kind == "ratio":
        return majorant_weight(parse_majorant(rest), nu=nu, cutoff=cutoff)
    raise ValueError(f"unknown weight spec {spec!r}")


def parse_majorant(spec: str) -> Majorant:
    """``exp:C:zeta``, ``sqrt`` or ``powexp:a:p``."""
    kind, _, rest = str(spec).partition(":")
    if kind == "exp":
        C, zeta = (float(x) for x in rest.split(":"))
        return Majorant.exponential(C, zeta)
    if kind == "sqrt":
        return Majorant.sqrt_exp()
    if kind == "powexp":
        a, p = (float(x) for x in rest.split(":"))
        return Majorant.power_exp(a, p)
    raise ValueError(f"unknown majorant spec {spec!r}")


def _weight_zeta(spec) -> float | None:
    kind, _, rest = str(spec).partition(":")
    if kind == "exp":
        try:
            return float(rest.split(":")[1])
        except (IndexError, ValueError):
            return None
    return None


# ------------------------------------------------------------------ config

@dataclass
class ExperimentConfig:
    """A flat key/value experiment description (see ``KNOWN_KEYS``)."""

    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        return cls(dict(data))

    def merged(self, overrides: dict) -> "ExperimentConfig":
        vals = dict(self.values)
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(vals)

    def get(self, key, default=None):
        v = self.values.get(key)
        if v is None:
            v = DEFAULTS.get(key, default) if default is None else default
        return v

    # -- derived dimensions --------------------------------------------------
    @property
    def nu(self) -> int:
        if self.values.get("nu") is not None:
            return int(self.values["nu"])
        if self.values.get("omega") is not None:
            return len(_floats(self.values["omega"]))
        return 1

    @property
    def d(self) -> int:
        if self.values.get("d") is not None:
            return int(self.values["d"])
        if self.values.get("box") is not None:
            return parse_box(self.values["box"]).d
        if self.values.get("alpha") is not None:
            return max(1, len(_floats(self.values["alpha"])) // self.nu)
        return 1

    def resolved(self, command: str | None = None) -> dict:
        out = {k: v for k, v in DEFAULTS.items()}
        out.update(self.values)
        out["nu"], out["d"] = self.nu, self.d
        if command:
            out["command"] = command
        out.pop("out", None)
        return {k: out[k] for k in sorted(out)}

    # -- builders --------------------------------------------------------------
    def alpha(self) -> np.ndarray:
        return np.array(_floats(self.values["alpha"])).reshape(self.nu, self.d)

    def omega(self) -> np.ndarray:
        return np.array(_floats(self.values["omega"]))

    def weight(self) -> SpectralWeight:
        cutoff = self.values.get("cutoff")
        return parse_weight(self.values["weight"], self.nu, None if cutoff is None else int(cutoff))

    def majorant(self) -> Majorant:
        return parse_majorant(self.values["majorant"])

    def msa_params(self) -> MsaParams:
        return MsaParams(**self.values.get("msa", {}))

    def operator_config(self, g=None) -> OperatorConfig:
        g = float(self.values["g"] if g is None else g)
        hull = sample_hull(self.weight(), int(self.values["seed"])) if g != 0 else None
        return OperatorConfig.make(self.omega(), self.alpha().ravel(), hull, g, d=self.d)

    # -- validation --------------------------------------------------------------
    def validate(self, command: str | None = None) -> list[Issue]:
        return validate(self, command)


def _needs_hull(cfg: ExperimentConfig, command) -> bool:
    if command == "sweep":
        return True
    if command in ("spectrum", "green", "msa", "decay"):
        try:
            return float(cfg.values.get("g", 0) or 0) != 0
        except (TypeError, ValueError):
            return False
    return False


def validate(config, command: str | None = None) -> list[Issue]:
    """Violations of module preconditions (errors) and hypothesis warnings.

    With no command, every key required by some subcommand is required.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig(dict(config))
    v = cfg.values
    issues: list[Issue] = []

    def err(msg):
        issues.append(Issue("error", msg))

    def warn(msg):
        issues.append(Issue("warning", msg))

    unknown = sorted(set(v) - KNOWN_KEYS)
    if unknown:
        err("unknown keys: " + ", ".join(unknown))
    if command is not None and command not in SUBCOMMANDS:
        err(f"unknown subcommand {command!r}")
    required = REQUIRED.get(command) if command else sorted({k for ks in REQUIRED.values() for k in ks})
    required = list(required or [])
    if _needs_hull(cfg, command):
        required += [k for k in ("weight", "seed") if k not in required]
    for key in required:
        if v.get(key) is None:
            err(f"missing required key '{key}'")

    nu, d = cfg.nu, cfg.d
    if nu < 1 or d < 1:
        err("nu and d must be >= 1")
    if v.get("alpha") is not None:
        try:
            a = _floats(v["alpha"])
            if len(a) != nu * d:
                err(f"alpha has {len(a)} entries; a {nu}x{d} frequency matrix needs {nu * d}")
            elif not all(math.isfinite(x) for x in a):
                err("alpha entries must be finite")
        except (TypeError, ValueError):
            err("alpha must be a list of numbers")
    if v.get("omega") is not None:
        try:
            if len(_floats(v["omega"])) != nu:
                err(f"omega must have nu = {nu} coordinates")
        except (TypeError, ValueError):
            err("omega must be a list of numbers")
    if v.get("lmax") is not None and int(v["lmax"]) < 2:
        err("lmax must be >= 2")
    if v.get("seed") is not None:
        try:
            if int(v["seed"]) < 0 or int(v["seed"]) != float(v["seed"]):
                err("seed must be a nonnegative integer")
        except (TypeError, ValueError):
            err("seed must be a nonnegative integer")
    if v.get("weight") is not None:
        try:
            _weight_check(v["weight"])
        except (TypeError, ValueError) as e:
            err(f"weight: {e}")
    if v.get("majorant") is not None:
        try:
            parse_majorant(v["majorant"])
        except (TypeError, ValueError) as e:
            err(f"majorant: {e}")
    if v.get("cutoff") is not None and int(v["cutoff"]) < 0:
        err("cutoff must be >= 0")
    for key in ("eps_list", "eps"):
        if v.get(key) is not None:
            try:
                eps = _floats(v[key])
                if not eps or any(not 0 < e <= 1 for e in eps):
                    err(f"{key} entries must lie in (0, 1]")
            except (TypeError, ValueError):
                err(f"{key} must be numbers")
    if v.get("grid") is not None and int(v["grid"]) < 8:
        err("grid must be >= 8")
    if v.get("jitter") is not None and float(v["jitter"]) < 0:
        err("jitter must be >= 0")
    if v.get("kappa") is not None and not 0 < float(v["kappa"]) <= 1:
        err("kappa must lie in (0, 1]")
    if v.get("box") is not None:
        try:
            box = parse_box(v["box"])
            if box.size > MAX_SITES:
                err(f"box has {box.size} sites, above the limit {MAX_SITES}")
            if v.get("d") is not None and box.d != int(v["d"]):
                err(f"box has dimension {box.d} but d = {v['d']}")
        except (TypeError, ValueError) as e:
            err(f"box: {e}")
    for key in ("g",):
        if v.get(key) is not None:
            try:
                if not math.isfinite(float(v[key])):
                    err("g must be finite")
            except (TypeError, ValueError):
                err("g must be a number")
    if v.get("g_list") is not None:
        try:
            if not _floats(v["g_list"]):
                err("g_list must be nonempty")
        except (TypeError, ValueError):
            err("g_list must be numbers")
    if v.get("pairs") is not None:
        try:
            pairs = parse_pairs(v["pairs"])
            if v.get("box") is not None:
                box = parse_box(v["box"])
                for x, y in pairs:
                    if not (box.contains(x)[0] and box.contains(y)[0]):
                        err(f"pair {x}/{y} lies outside the box")
        except (TypeError, ValueError) as e:
            err(f"pairs: {e}")
    if v.get("msa") is not None:
        if not isinstance(v["msa"], dict):
            err("msa must be an object with keys m, b, gamma, J, L0, r")
        else:
            extra = sorted(set(v["msa"]) - {"m", "b", "gamma", "J", "L0", "r"})
            if extra:
                err("unknown msa keys: " + ", ".join(extra))
            else:
                try:
                    for msg in param_violations(**v["msa"]):
                        err(msg)
                except TypeError:
                    err("msa parameters must be numbers")
    if v.get("k_max") is not None and int(v["k_max"]) < 0:
        err("k_max must be >= 0")
    if v.get("E_grid") is not None and v["E_grid"] != "auto":
        try:
            _floats(v["E_grid"])
        except (TypeError, ValueError):
            err("E_grid must be a list of numbers or \"auto\"")
    if v.get("threads") is not None and int(v["threads"]) < 1:
        err("threads must be >= 1")

    # hypothesis warnings
    zeta = _weight_zeta(v.get("weight"))
    A = v.get("fitted_A")
    if A is None and zeta is not None and v.get("alpha") is not None and not any(i.level == "error" for i in issues):
        try:
            A = diophantine_profile(cfg.alpha(), int(v.get("lmax") or 1000)).fitted_A
        except (ValueError, ArithmeticError):
            A = None
    if A is not None and zeta is not None and math.isfinite(float(A)):
        A = float(A)
        if (A + 1) * zeta >= 1:
            warn(f"(A+1)ζ = {(A + 1) * zeta:.3g} ≥ 1")
        if zeta < 1:
            eta = zeta / (1 - zeta)
            if A * eta >= 1:
                warn(f"Aη = {A * eta:.3g} ≥ 1")
    return issues


def _weight_check(spec):
    kind, _, rest = str(spec).partition(":")
    if kind in ("exp", "power"):
        a, b = (float(x) for x in rest.split(":"))
        if a <= 0 or b <= 0:
            raise ValueError("parameters must be positive")
    elif kind == "ratio":
        parse_majorant(rest)
    else:
        raise ValueError(f"unknown weight spec {spec!r}")


# ------------------------------------------------------------------ output

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (tuple, list, np.ndarray)):
        return ";".join(_fmt(y) for y in x)
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Box):
        return obj.to_list()
    return obj


class Writer:
    def __init__(self, out: Path, command: str):
        self.out, self.command = Path(out), command
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def csv(self, header, rows, suffix=""):
        path = self.out / f"{self.command}{suffix}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(csv_text(header, rows))
        self.files.append(path)

    def json(self, payload, suffix=""):
        path = self.out / f"{self.command}{suffix}.json"
        with open(path, "w", newline="\n") as fh:
            json.dump(_jsonable(payload), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        self.files.append(path)


# ------------------------------------------------------------------ subcommands

def run_dioph(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    fit = diophantine_profile(cfg.alpha(), int(cfg.values["lmax"]))
    wr.csv(["L", "min_dist"], fit.samples)
    return {"fit": fit.to_dict(), "records": fit.records}


def run_hull(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    w = cfg.weight()
    hs = sample_hull(w, int(cfg.values["seed"]))
    n = int(cfg.get("grid") or (1024 if cfg.nu == 1 else 64))
    vals = eval_on_grid(hs, n)
    axes = np.meshgrid(*([np.arange(n) / n] * cfg.nu), indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    header = [f"omega{i + 1}" for i in range(cfg.nu)] + ["v"]
    wr.csv(header, ([*p, val] for p, val in zip(pts, vals.ravel())))
    rep = holder_estimate(hs, float(cfg.get("kappa")), n)
    return {"holder": rep.to_dict(), "weight": w.describe()}


def run_variance(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    w, m = cfg.weight(), cfg.majorant()
    grid_n = int(cfg.get("grid") or 256)
    jitter = float(cfg.get("jitter"))
    eps_list = _floats(cfg.values["eps_list"])
    reps = [variance_report(w, m, e, grid_n=grid_n, jitter=jitter) for e in eps_list]
    wr.csv(["epsilon", "grid_upper", "karhunen_lower", "paper_bound", "chain_ok"],
           ([r.epsilon, r.grid_upper, r.karhunen_lower, r.paper_bound, r.chain_ok] for r in reps))
    out = {"reports": [r.to_dict() for r in reps], "weight": w.describe(), "majorant": m.describe()}
    if len(eps_list) >= 4:
        try:
            eta, curve = measured_eta(w, eps_list, grid_n=grid_n, jitter=jitter)
            out["eta"] = {"fitted": eta, "curve": curve}
        except ValueError as e:
            out["eta"] = {"error": str(e)}
    return out


def run_bump(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    m = cfg.majorant()
    eps = _floats(cfg.values["eps"])[0]
    jcut = cfg.get("jcut")
    bump = build_bump(m, eps, nu=cfg.nu, j_cut=None if jcut is None else int(jcut))
    lam = np.linspace(0.0, float(bump.radii[-1]), 1001)
    gh = bump.ghat_1d(lam)
    wr.csv(["lambda", "ghat", "log_bound"], zip(lam, gh, bump.log_abs_bound(lam)), suffix="_ghat")
    xi, g1 = bump.reconstruct(n_xi=int(cfg.get("grid") or 1024))
    wr.csv(["xi", "g"], zip(xi, g1), suffix="_g")
    outside = np.abs(xi) > eps
    return {"bump": bump.to_dict(), "g0": bump.g0(), "ghat0": float(bump.ghat_1d(0.0)),
            "max_outside_ratio": float(np.abs(g1[outside]).max() / np.abs(g1).max()) if outside.any() else 0.0,
            "decay_violations": bump.decay_violations(lam)}


def _operator(cfg: ExperimentConfig, g=None):
    box = parse_box(cfg.values["box"])
    return cfg.operator_config(g).operator(box), box


def run_spectrum(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    op, box = _operator(cfg)
    ev = op.eigenvalues
    wr.csv(["index", "eigenvalue"], enumerate(ev))
    return {"n": len(ev), "min": float(ev[0]), "max": float(ev[-1])}


def run_green(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    op, box = _operator(cfg)
    E = float(cfg.values["E"])
    q = green(op, E, parse_pairs(cfg.values["pairs"]))
    dist = float(op.spectral_distance(E))
    ctx = [float(combes_thomas_bound(dist, sum(abs(a - b) for a, b in zip(x, y)), box.d)) if dist > 0 else math.inf
           for x, y in q.pairs]
    wr.csv(["x", "y", "G", "threshold_context"], ((x, y, val, c) for (x, y), val, c in zip(q.pairs, q.values, ctx)))
    return {"E": E, "condition_estimate": q.condition_estimate, "spectral_distance": dist,
            "threshold_context": "Combes-Thomas bound (2/dist) exp(-log(1 + dist/(4d)) |x-y|)"}


def _e_grid(cfg: ExperimentConfig, ocfg: OperatorConfig, params: MsaParams):
    spec = cfg.values["E_grid"]
    if spec == "auto":
        L1 = scale_sequence(params.L0, params.gamma, 1)[1]
        ev = ocfg.operator(centered_box(L1, ocfg.d)).eigenvalues
        return energy_grid(ev, n_fill=int(cfg.get("n_fill")))
    return np.array(_floats(spec))


def _omega_samples(cfg: ExperimentConfig):
    s = cfg.get("omega_samples")
    if isinstance(s, (int, float)) and not isinstance(s, bool):
        rng = np.random.default_rng([int(cfg.values.get("seed") or 0), 1])
        return [rng.random(cfg.nu) for _ in range(int(s))]
    return [np.array(_floats(w)) for w in s]


def run_msa(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    params = cfg.msa_params()
    ocfg = cfg.operator_config()
    window = cfg.get("window")
    cert = check_msa_assumptions(
        params, ocfg, _e_grid(cfg, ocfg, params), _omega_samples(cfg), k_max=int(cfg.get("k_max")),
        window=None if window is None else parse_box(window), n_random=int(cfg.get("n_random")),
        seed=int(cfg.values.get("seed") or 0), threads=threads)
    rows = [(r["omega_index"], r["E"], r["k"], r["assumption"], str(parse_box(r["region"])) if r["region"] else "",
             r["member"], str(parse_box(r["rectangle"]))) for r in cert.witness_rows()]
    wr.csv(["omega_index", "E", "k", "assumption", "region", "member", "rectangle"], rows)
    return {"certificate": cert.to_dict()}


def _indices(cfg: ExperimentConfig, n: int) -> list[int]:
    idx = cfg.get("indices")
    if idx is None:
        k = min(20, n)
        start = (n - k) // 2
        return list(range(start, start + k))
    if isinstance(idx, str) and idx.startswith("middle:"):
        k = min(int(idx.split(":")[1]), n)
        start = (n - k) // 2
        return list(range(start, start + k))
    return [int(i) for i in _floats(idx)]


def run_decay(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    op, box = _operator(cfg)
    reps = [eigen_decay(op, i) for i in _indices(cfg, op.n)]
    wr.csv(["eigenvalue", "fitted_mass", "residual"], ((r.eigenvalue, r.fitted_mass, r.residual) for r in reps))
    masses = [r.fitted_mass for r in reps]
    return {"median_mass": float(np.nanmedian(masses)), "reports": [r.to_dict() for r in reps]}


def run_sweep(cfg: ExperimentConfig, wr: Writer, threads: int) -> dict:
    rows, medians = [], []
    for g in _floats(cfg.values["g_list"]):
        op, box = _operator(cfg, g)
        reps = [(i, eigen_decay(op, i)) for i in _indices(cfg, op.n)]
        rows += [(g, i, r.eigenvalue, r.fitted_mass, r.residual) for i, r in reps]
        medians.append({"g": g, "median_mass": float(np.nanmedian([r.fitted_mass for _, r in reps]))})
    wr.csv(["g", "index", "eigenvalue", "fitted_mass", "residual"], rows)
    ms = [m["median_mass"] for m in medians]
    return {"medians": medians, "nondecreasing": bool(all(b >= a - 0.02 for a, b in zip(ms, ms[1:])))}


RUNNERS = {
    "dioph": run_dioph, "hull": run_hull, "variance": run_variance, "bump": run_bump,
    "spectrum": run_spectrum, "green": run_green, "msa": run_msa, "decay": run_decay,
    "sweep": run_sweep,
}


def run(config: ExperimentConfig, command: str, out=".", threads: int = 1, stream=None) -> int:
    """Validate, run one subcommand, write its artifacts; returns the exit status."""
    stream = sys.stderr if stream is None else stream
    issues = validate(config, command)
    for issue in issues:
        print(issue, file=stream)
    if any(i.level == "error" for i in issues):
        return EXIT_VALIDATION
    wr = Writer(Path(out), command)
    try:
        result = RUNNERS[command](config, wr, threads)
    except (ResonantFrequencyError, ResonantEnergyError, np.linalg.LinAlgError, FloatingPointError,
            ArithmeticError) as e:
        print(f"numerical failure: {e}", file=stream)
        return EXIT_NUMERICAL
    except (MajorantError, ValueError) as e:
        print(f"error: {e}", file=stream)
        return EXIT_VALIDATION
    payload = {"config": config.resolved(command), "result": result,
               "warnings": [i.message for i in issues if i.level == "warning"]}
    wr.json(payload)
    for f in wr.files:
        print(f, file=sys.stdout)
    return EXIT_OK


# ------------------------------------------------------------------ argparse

def _common(defaults_suppressed: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    kw = {"default": argparse.SUPPRESS} if defaults_suppressed else {}
    p.add_argument("--config", metavar="PATH", help="JSON experiment file", **kw)
    p.add_argument("--out", metavar="DIR", help="output directory (default: .)", **kw)
    p.add_argument("--threads", type=int, metavar="N", help="worker threads", **kw)
    p.add_argument("--seed", type=int, metavar="S", help="hull seed", **kw)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasiloc", parents=[_common(False)],
                                     description="Quasiperiodic Schrödinger operators with Gaussian hulls.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = add("dioph", "Diophantine return-distance profile and power-law fit")
    p.add_argument("--alpha", help="comma-separated row-major entries")
    p.add_argument("--nu", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--lmax", type=int)

    p = add("hull", "sample a Gaussian hull on a grid, with a Hölder estimate")
    p.add_argument("--weight", help="exp:C:zeta | power:c:delta | ratio:<majorant>")
    p.add_argument("--nu", type=int)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--kappa", type=float)

    p = add("variance", "conditional-variance sandwich over a list of epsilons")
    p.add_argument("--weight")
    p.add_argument("--majorant", help="exp:C:zeta | sqrt | powexp:a:p")
    p.add_argument("--eps-list", dest="eps_list")
    p.add_argument("--grid", type=int)
    p.add_argument("--jitter", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--nu", type=int)

    p = add("bump", "Fourier-decay bump function samples")
    p.add_argument("--majorant")
    p.add_argument("--eps", type=float)
    p.add_argument("--nu", type=int)
    p.add_argument("--jcut", type=int)
    p.add_argument("--grid", type=int)

    for name, help_ in (("spectrum", "eigenvalues of the finite-volume operator"),
                        ("green", "selected Green function entries")):
        p = add(name, help_)
        p.add_argument("--box", help="a:b[,c:d...]")
        p.add_argument("--omega")
        p.add_argument("--alpha")
        p.add_argument("--g", type=float)
        p.add_argument("--weight")
        p.add_argument("--cutoff", type=int)
        if name == "green":
            p.add_argument("--E", type=float)
            p.add_argument("--pairs", help="x/y;x/y with comma-separated coordinates")

    add("msa", "finite-window check of the multiscale hypotheses (config-driven)")
    add("decay", "eigenfunction decay masses (config-driven)")
    add("sweep", "decay masses across a list of couplings (config-driven)")
    return parser


def _threads(args_threads, cfg: ExperimentConfig) -> int:
    env = os.environ.get("QUASILOC_THREADS")
    if env:
        return max(1, int(env))
    if args_threads:
        return max(1, int(args_threads))
    return max(1, int(cfg.get("threads")))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ns = vars(args)
    command = ns.pop("command")
    path, out, threads = ns.pop("config", None), ns.pop("out", None), ns.pop("threads", None)
    try:
        base = ExperimentConfig.load(path) if path else ExperimentConfig()
    except (OSError, ValueError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    cfg = base.merged(ns)
    out = out or cfg.values.get("out") or "."
    try:
        nthreads = _threads(threads, cfg)
    except ValueError:
        print("error: threads must be an integer", file=sys.stderr)
        return EXIT_VALIDATION
    return run(cfg, command, out=out, threads=nthreads)


if __name__ == "__main__":
    sys.exit(main())
