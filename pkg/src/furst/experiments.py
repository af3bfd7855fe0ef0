"""Configuration-driven experiment runner.

A run reads one JSON document, computes its estimates and writes
``report.json``, ``table.csv`` and plot data (CSV and PNG) into
``output_dir``. Every file is written to a temporary name first and then
renamed. Tables hold only seed-determined values formatted with ``repr``,
so the same config gives byte-identical CSV for any FURST_THREADS.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import math
import os
import platform
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, parallel, plotting
from .entropy import entropy_profile, porosity_profile
from .errors import ConfigError, FurstError, UndersampledError
from .geometry import Mat2, validate_sl2
from .products import AtomicMeasureG, lyapunov_estimate, oseledets_diagnostic
from .semigroup import (
    Mat2Q,
    diophantine_separation,
    entropy_of_masses,
    freeness_check,
    rw_entropy_profile,
    s_lambda,
    transversality_pair,
)
from .stationary import (
    check_hypotheses,
    default_k_window,
    dimension_formula,
    entropy_dimension_estimate,
    local_dimension_profile,
    sample_stationary,
    stationarity_distance,
    total_variation,
)

EXPERIMENTS = ("lyapunov", "dimension", "freeness", "dioph", "porosity", "scan-slambda", "scan-transversality")
SCANS = ("scan-slambda", "scan-transversality")
FLOAT_ONLY = "n/a(float)"

SCAN_COLUMNS = (
    "lambda", "chi_hat", "chi_stderr", "h_n", "free_up_to", "c_n",
    "entropy_slope", "local_dim_mean", "local_dim_std", "formula_value", "formula_gap",
    "seed", "n_word", "n_samples", "k_min", "k_max",
)


# --- scalars -------------------------------------------------------------------

_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b, ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b}


def _sqrt(x):
    if isinstance(x, Fraction) and x >= 0:
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    if x < 0:
        raise ConfigError(f"sqrt of negative value {x}")
    return math.sqrt(x)


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        return Fraction(repr(node.value)) if isinstance(node.value, float) else Fraction(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        a, b = _eval(node.left), _eval(node.right)
        if isinstance(node.op, ast.Div) and b == 0:
            raise ConfigError("division by zero")
        if isinstance(a, float) or isinstance(b, float):
            a, b = float(a), float(b)
        return _BINOPS[type(node.op)](a, b)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords:
        return _sqrt(_eval(node.args[0]))
    raise ConfigError(f"unsupported expression element {ast.dump(node)}")


def parse_scalar(value) -> Fraction | float:
    """Exact Fraction for integers, decimals, "p/q" and arithmetic on them; float once sqrt is irrational.

    >>> parse_scalar("3/2"), parse_scalar("sqrt(2)/2")
    (Fraction(3, 2), 0.7071067811865476)
    """
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"non-finite number {value!r}")
        return Fraction(repr(value))
    if not isinstance(value, str):
        raise ConfigError(f"expected a number or string, got {value!r}")
    try:
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        pass
    try:
        tree = ast.parse(value.strip(), mode="eval")
    except SyntaxError as e:
        raise ConfigError(f"cannot parse {value!r}") from e
    return _eval(tree)


def fmt_scalar(x) -> str:
    return str(x) if isinstance(x, Fraction) else repr(float(x))


def build_matrix(rows):
    """Mat2Q when every entry is exact, else a float Mat2 checked to det 1."""
    try:
        (a, b), (c, d) = rows
    except (TypeError, ValueError) as e:
        raise ConfigError(f"a matrix must be [[a, b], [c, d]], got {rows!r}") from e
    vals = [parse_scalar(v) for v in (a, b, c, d)]
    if all(isinstance(v, Fraction) for v in vals):
        if vals[0] * vals[3] - vals[1] * vals[2] != 1:
            raise ConfigError(f"matrix {rows!r} does not have determinant 1")
        return Mat2Q(*vals)
    try:
        return validate_sl2([float(v) for v in vals])
    except FurstError as e:
        raise ConfigError(f"matrix {rows!r}: {e}") from e


# --- config --------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    experiment: str
    generators: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    n_word: int = 128
    n_samples: int = 1_000_000
    k_min: int = 6
    k_max: int | None = None
    maxlen: int = 12
    trials: int = 200
    seed: int = 0
    lambda_grid: list | None = None
    output_dir: str = "out"
    # estimator settings beyond the core schema
    n_steps: int = 10_000
    probes: int = 2000
    r_min: float | None = None  # None: smallest dyadic radius the sample supports
    r_max: float = 2.0**-6
    dioph_n: int = 8
    porosity_h: float | None = None
    porosity_delta: float = 0.1
    porosity_m: int = 8
    porosity_n1: int = 4
    porosity_n2: int = 10

    _INTS = ("n_word", "n_samples", "k_min", "maxlen", "trials", "n_steps", "probes", "dioph_n", "porosity_m", "porosity_n1", "porosity_n2")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("the config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("missing field: experiment")
        try:
            cfg = cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from e
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        for name in self._INTS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.k_max is not None and (isinstance(self.k_max, bool) or not isinstance(self.k_max, int) or self.k_max <= self.k_min):
            raise ConfigError("k_max must be an integer above k_min")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ConfigError("output_dir must be a nonempty path")
        if not 0 < float(self.r_max) <= 0.5 or (self.r_min is not None and not 0 < float(self.r_min) < float(self.r_max)):
            raise ConfigError("need 0 < r_min < r_max <= 1/2")
        if self.porosity_n2 <= self.porosity_n1:
            raise ConfigError("porosity_n2 must exceed porosity_n1")
        scan = self.experiment in SCANS
        if scan != (self.lambda_grid is not None):
            raise ConfigError("lambda_grid is required for scans and only for scans")
        if scan:
            if not isinstance(self.lambda_grid, list) or not self.lambda_grid:
                raise ConfigError("lambda_grid must be a nonempty list")
            for lam in self.lambda_grid:
                if parse_scalar(lam) == 0:
                    raise ConfigError("lambda = 0 gives a degenerate family")
            if self.generators:
                raise ConfigError("scans build their own generators; drop the generators field")
            n_atoms = 2
        else:
            if not isinstance(self.generators, list) or not self.generators:
                raise ConfigError("generators must be a nonempty list of 2x2 matrices")
            atoms = [build_matrix(g) for g in self.generators]
            if len(set(atoms)) != len(atoms):
                raise ConfigError("generators must be pairwise distinct")
            n_atoms = len(atoms)
        self.measure_weights(n_atoms)

    def measure_weights(self, n_atoms: int) -> tuple[Fraction, ...]:
        if not self.weights:
            return tuple(Fraction(1, n_atoms) for _ in range(n_atoms))
        ws = [parse_scalar(w) for w in self.weights]
        if len(ws) != n_atoms:
            raise ConfigError(f"{len(ws)} weights for {n_atoms} generators")
        if not all(isinstance(w, Fraction) for w in ws):
            raise ConfigError("weights must be rational")
        if any(w <= 0 for w in ws) or sum(ws) != 1:
            raise ConfigError("weights must be positive and sum to 1")
        return tuple(ws)

    def measure(self) -> AtomicMeasureG:
        atoms = [build_matrix(g) for g in self.generators]
        return AtomicMeasureG(tuple(atoms), self.measure_weights(len(atoms)))

    def family(self, lam) -> AtomicMeasureG:
        lam = parse_scalar(lam)
        if isinstance(lam, Fraction):
            atoms = s_lambda(lam) if self.experiment == "scan-slambda" else transversality_pair(lam)
        else:
            rows = [[[1, 0], [lam, 1]], [[1, lam], [0, 1]]] if self.experiment == "scan-slambda" else [[[1, 0], [1, 1]], [[1, lam], [1, 1 + lam]]]
            atoms = [validate_sl2([float(e) for r in m for e in r]) for m in rows]
        return AtomicMeasureG(tuple(atoms), self.measure_weights(2))

    def to_json(self) -> dict:
        return asdict(self)


# --- output helpers ------------------------------------------------------------


def _tmp(path: Path) -> Path:
    return path.with_name(".tmp-" + path.name)


def _write_text(path: Path, text: str) -> None:
    tmp = _tmp(path)
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row[h]) for h in header])
    _write_text(path, buf.getvalue())


def _figure(path: Path, draw, *args) -> None:
    tmp = _tmp(path)
    draw(*args, tmp)
    os.replace(tmp, path)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, Fraction):
        return str(v)
    return v


# --- per-measure estimates -----------------------------------------------------


def _h_exact(mu: AtomicMeasureG, cfg: ExperimentConfig) -> dict:
    free = freeness_check(mu.atoms, cfg.maxlen)
    profile = rw_entropy_profile(mu, cfg.maxlen)
    sep = diophantine_separation(mu.atoms, min(cfg.dioph_n, cfg.maxlen))
    if free.free:
        h_rw, source = entropy_of_masses(mu.weights), "exact freeness: H(mu)"
    else:
        h_rw, source = profile.estimate, f"h_{cfg.maxlen} (an upper bound for the random-walk entropy)"
    return {"h_n": profile.estimate, "free_up_to": free.free_up_to, "c_n": sep.c_n, "h_rw": h_rw, "h_source": source,
            "collision": free.collision, "min_separation": sep.min_separation}


def _h_float(mu: AtomicMeasureG) -> dict:
    h = entropy_of_masses(mu.weights)
    return {"h_n": FLOAT_ONLY, "free_up_to": FLOAT_ONLY, "c_n": FLOAT_ONLY, "h_rw": h,
            "h_source": "H(mu), an upper bound; exact enumeration skipped for float entries"}


def _local_dims(pts, cfg: ExperimentConfig):
    r_max = float(cfg.r_max)
    if cfg.r_min is not None:
        return local_dimension_profile(pts, cfg.probes, float(cfg.r_min), r_max, cfg.seed)
    # finest dyadic radius (at least two octaves below r_max) where every probe ball is populated
    for k in range(14, 1, -1):
        r_min = 2.0**-k
        if r_min > r_max / 4:
            break
        try:
            return local_dimension_profile(pts, cfg.probes, r_min, r_max, cfg.seed)
        except UndersampledError:
            continue
    raise UndersampledError(f"no radius window down from {r_max:g} keeps 50 points in every probe ball")


def dimension_row(mu: AtomicMeasureG, cfg: ExperimentConfig, plots: Path, stem: str) -> tuple[dict, dict]:
    """One table row (scan columns) plus the extra details for report.json."""
    check_hypotheses(mu)
    chi = lyapunov_estimate(mu, cfg.n_steps, cfg.trials, cfg.seed)
    h = _h_exact(mu, cfg) if mu.exact else _h_float(mu)
    formula = dimension_formula(h["h_rw"], chi.chi_hat)
    pts = sample_stationary(mu, cfg.n_word, cfg.n_samples, seed=cfg.seed)
    k_min, k_max = (cfg.k_min, cfg.k_max) if cfg.k_max is not None else default_k_window(pts.size, cfg.k_min)
    est = entropy_dimension_estimate(pts, k_min, k_max)
    loc = _local_dims(pts, cfg)
    check_n = max(1000, cfg.n_samples // 10)
    doubled = total_variation(
        sample_stationary(mu, cfg.n_word, check_n, seed=cfg.seed + 1),
        sample_stationary(mu, 2 * cfg.n_word, check_n, seed=cfg.seed + 1),
        8,
    )
    row = {
        "lambda": "", "chi_hat": chi.chi_hat, "chi_stderr": chi.std_err, "h_n": h["h_n"],
        "free_up_to": h["free_up_to"], "c_n": h["c_n"], "entropy_slope": est.slope,
        "local_dim_mean": loc.mean, "local_dim_std": loc.std, "formula_value": formula,
        "formula_gap": abs(est.slope - formula), "seed": cfg.seed, "n_word": cfg.n_word,
        "n_samples": cfg.n_samples, "k_min": k_min, "k_max": k_max,
    }
    levels = np.arange(0, k_max + 1)
    ents = entropy_profile(pts, levels)
    ent_rows = [{"level": int(k), "entropy": float(e), "fit": float(est.slope * k + est.intercept), "in_window": bool(k_min <= k <= k_max)} for k, e in zip(levels, ents)]
    write_csv(plots / f"{stem}_entropy_levels.csv", ("level", "entropy", "fit", "in_window"), ent_rows)
    _figure(plots / f"{stem}_entropy_levels.png", plotting.entropy_levels_figure, levels, ents, est.slope, est.intercept, (k_min, k_max))
    counts, edges = np.histogram(loc.dims, bins=40)
    hist_rows = [{"bin_lo": float(a), "bin_hi": float(b), "count": int(c)} for a, b, c in zip(edges[:-1], edges[1:], counts)]
    write_csv(plots / f"{stem}_local_dims.csv", ("bin_lo", "bin_hi", "count"), hist_rows)
    _figure(plots / f"{stem}_local_dims.png", plotting.local_dims_figure, edges, counts, loc.mean)
    details = {
        "h_rw_used": h["h_rw"], "h_rw_source": h["h_source"],
        "stationarity_tv_level8": stationarity_distance(mu, pts, 8, cfg.seed),
        "n_word_doubling_tv_level8": doubled, "n_word_doubling_samples": check_n,
        "entropy_residuals": est.residuals, "plugin_bias": est.bias,
        "local_dim_r_min": loc.radii[0], "local_dim_r_max": loc.radii[-1], "local_dim_radii": loc.radii, "local_dim_min_ball_count": loc.min_count,
    }
    if "collision" in h and h["collision"] is not None:
        details["collision_words"] = h["collision"]
    return row, details


# --- experiments ---------------------------------------------------------------


def _lyapunov(cfg, out, plots):
    mu = cfg.measure()
    est = lyapunov_estimate(mu, cfg.n_steps, cfg.trials, cfg.seed)
    row = {"chi_hat": est.chi_hat, "chi_stderr": est.std_err, "lambda_hat": est.lam,
           "log_norm_bound": mu.max_log_norm(), "n_steps": cfg.n_steps, "trials": cfg.trials, "seed": cfg.seed}
    header = list(row)
    details = {}
    try:
        ose = oseledets_diagnostic(mu, min(cfg.n_steps, 200), cfg.trials, cfg.seed)
        details = {"oseledets_slope": ose.mean_slope, "oseledets_target": ose.target_slope,
                   "oseledets_exact_convergence": ose.exact_convergence, "oseledets_relative_gap": ose.relative_gap}
    except FurstError as e:
        details = {"oseledets_skipped": e.code}
    return header, [row], [details]


def _dimension(cfg, out, plots):
    row, details = dimension_row(cfg.measure(), cfg, plots, "dimension")
    return list(SCAN_COLUMNS), [row], [details]


def _freeness(cfg, out, plots):
    mu = cfg.measure()
    if not mu.exact:
        raise ConfigError("freeness needs exact (rational) generators")
    free = freeness_check(mu.atoms, cfg.maxlen)
    prof = rw_entropy_profile(mu, cfg.maxlen)
    rows = [{"n": n, "h_n": h, "free": n <= free.free_up_to} for n, h in enumerate(prof.h_n, 1)]
    return ["n", "h_n", "free"], rows, [{"free_up_to": free.free_up_to, "collision": free.collision}]


def _dioph(cfg, out, plots):
    mu = cfg.measure()
    if not mu.exact:
        raise ConfigError("dioph needs exact (rational) generators")
    rows, details = [], []
    for n in range(1, cfg.maxlen + 1):
        rep = diophantine_separation(mu.atoms, n)
        rows.append({"n": n, "min_separation": rep.min_separation, "c_n": rep.c_n, "raw_rate": rep.raw_rate})
        details.append({"n": n, "witness": rep.pair_witness})
    return ["n", "min_separation", "c_n", "raw_rate"], rows, details


def _porosity(cfg, out, plots):
    mu = cfg.measure()
    pts = sample_stationary(mu, cfg.n_word, cfg.n_samples, seed=cfg.seed)
    if cfg.porosity_h is None:
        k_min, k_max = (cfg.k_min, cfg.k_max) if cfg.k_max is not None else default_k_window(pts.size, cfg.k_min)
        h = entropy_dimension_estimate(pts, k_min, k_max).slope
    else:
        h = float(cfg.porosity_h)
    prof = porosity_profile(pts, h, cfg.porosity_delta, cfg.porosity_m, cfg.porosity_n1, cfg.porosity_n2, cfg.probes, cfg.seed)
    row = {"h": prof.h, "delta": prof.delta, "m": prof.m, "n1": prof.n1, "n2": prof.n2, "fraction": prof.fraction,
           "samples": prof.samples, "empty_resampled": prof.empty_resampled, "seed": cfg.seed, "n_word": cfg.n_word, "n_samples": cfg.n_samples}
    return list(row), [row], [{}]


def _scan(cfg, out, plots):
    rows, details = [], []
    for i, lam in enumerate(cfg.lambda_grid):
        row, det = dimension_row(cfg.family(lam), cfg, plots, f"lambda{i:03d}")
        row["lambda"] = fmt_scalar(parse_scalar(lam))
        det["lambda"] = row["lambda"]
        rows.append(row)
        details.append(det)
    lams = [float(parse_scalar(lam)) for lam in cfg.lambda_grid]
    _figure(plots / "scan.png", plotting.scan_figure, lams, [r["entropy_slope"] for r in rows], [r["formula_value"] for r in rows])
    return list(SCAN_COLUMNS), rows, details


_RUNNERS = {"lyapunov": _lyapunov, "dimension": _dimension, "freeness": _freeness, "dioph": _dioph,
            "porosity": _porosity, "scan-slambda": _scan, "scan-transversality": _scan}

_NOTES = {
    "scan-slambda": "Rows never assert theorem conclusions. A dimension-one conclusion for |lambda| <= sqrt(2) - 1 needs "
    "freeness of a Galois conjugate, which is not verified here; only the measured gap is reported.",
    "scan-transversality": "Parameter-space transversality is not certified; rows report measured values only.",
}


def _provenance(cfg: ExperimentConfig) -> dict:
    return {"seed": cfg.seed, "furst": __version__, "numpy": np.__version__, "python": platform.python_version(),
            "threads": parallel.thread_count()}


def run(cfg: ExperimentConfig) -> dict:
    """Run one experiment; returns the report that was written to report.json.

    Library errors are recorded in report.json with their code and re-raised.
    """
    out = Path(cfg.output_dir)
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    report: dict[str, Any] = {"experiment": cfg.experiment, "config": cfg.to_json(), "provenance": _provenance(cfg)}
    if cfg.experiment in _NOTES:
        report["notes"] = _NOTES[cfg.experiment]
    try:
        header, rows, details = _RUNNERS[cfg.experiment](cfg, out, plots)
    except FurstError as e:
        report.update(status="error", error={"code": e.code, "type": type(e).__name__, "message": str(e)})
        _write_text(out / "report.json", json.dumps(_jsonable(report), indent=2) + "\n")
        raise
    write_csv(out / "table.csv", header, rows)
    report.update(status="ok", rows=[{**r, **d} for r, d in zip(rows, details)])
    _write_text(out / "report.json", json.dumps(_jsonable(report), indent=2) + "\n")
    return report
