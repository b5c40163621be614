"""Experiment configuration, the end-to-end pipeline and the convergence harnesses.

Configuration is a flat mapping of dotted keys (``section.name``).  Files are
INI-style (``[section]`` headers, ``name = value``) or the ``# key = value``
header of any output CSV, so every output can be re-run from its own header.
"""

from __future__ import annotations

import configparser
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import KINDS, bernstein_bound
from .errors import GeoflowError, InvalidArgumentError, NumericalConsistencyError, PointCloudIOError
from .laplacian import KernelConfig, build_graph_operators
from .recovery import RecoveryConfig, save_trace, trace_geodesic
from .sampling import (
    Model,
    PointCloud,
    fibonacci_sphere,
    load_point_cloud,
    sample_circle,
    sample_flat_torus,
    sample_sphere,
    save_point_cloud,
    tangent_project,
)
from .spectral import decompose, nystrom_extend, propagator
from .states import default_momentum, make_state_neighbor, make_state_tangent, pick_neighbor

log = logging.getLogger("geoflow")

# key -> (default, type). The order here is the order of echoed headers.
DEFAULTS: dict[str, tuple[str, type]] = {
    "manifold.model": ("Sphere2", str),
    "manifold.N": ("1000", int),
    "manifold.density": ("uniform", str),
    "manifold.seed": ("0", int),
    "manifold.input": ("", str),
    "manifold.intrinsic_dim": ("2", int),
    "kernel.lambda": ("1.0", float),
    "kernel.alpha": ("2.0", float),
    "kernel.epsilon": ("", str),
    "kernel.truncation_radius": ("6.0", float),
    "kernel.storage": ("dense", str),
    "kernel.epsilon_shift": ("0", str),
    "state.h": ("0.3", float),
    "state.j0": ("0", int),
    "state.xi": ("tangent", str),
    "state.direction": ("", str),
    "recovery.t_grid": ("0,0.2,0.4", str),
    "recovery.c_in": ("1.0", float),
    "recovery.c_out": ("2.0", float),
    "recovery.use_cutoff": ("true", bool),
    "recovery.local_mean": ("false", bool),
    "sweep.N_list": ("3000", str),
    "sweep.h_list": ("0.3,0.2,0.15,0.1", str),
    "sweep.seeds": ("10", int),
    "sweep.seed_start": ("0", int),
    "sweep.timings": ("false", bool),
    "consistency.M": ("4000", int),
    "consistency.N_list": ("250,500,1000", str),
    "consistency.t": ("0.5", float),
    "consistency.epsilon": ("0.05", float),
    "consistency.epsilon_shift": ("0.0", float),
    "consistency.seeds": ("10", int),
    "consistency.n_eval": ("200", int),
    "consistency.coordinate": ("1", int),
    "bounds.N_list": ("1e4,1e6,1e8", str),
    "bounds.h_list": ("0.3,0.1", str),
    "bounds.n": ("2", int),
    "bounds.delta": ("0.1", float),
    "bounds.t": ("1.0", float),
    "bounds.K_u": ("1.0", float),
    "bounds.C": ("1.0", float),
    "output.dir": ("out", str),
    "run.workers": ("1", int),
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, raw: str):
    kind = DEFAULTS[key][1]
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if kind is int:
            try:
                return int(raw)
            except ValueError:
                value = float(raw)
                if not value.is_integer():
                    raise
                return int(value)
        if kind is float:
            return float(raw)
    except ValueError:
        raise InvalidArgumentError(f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def parse_list(raw: str, kind=float) -> list:
    raw = raw.strip()
    if not raw:
        return []
    return [kind(float(v)) if kind is int else kind(v) for v in raw.split(",")]


@dataclass
class ExperimentConfig:
    """The resolved flat configuration; ``values`` holds typed values for every known key."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def resolve(cls, file_values: dict | None = None, overrides: dict | None = None) -> "ExperimentConfig":
        raw = {k: v[0] for k, v in DEFAULTS.items()}
        for source in (file_values or {}), (overrides or {}):
            for key, value in source.items():
                if key not in DEFAULTS:
                    raise InvalidArgumentError(f"unknown config key {key!r}")
                raw[key] = str(value)
        return cls({k: _convert(k, v) for k, v in raw.items()})

    def echo(self, sections: tuple[str, ...] | None = None) -> list[str]:
        lines = []
        for key in DEFAULTS:
            if sections is not None and key.split(".")[0] not in sections:
                continue
            value = self.values[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"# {key} = {value}")
        return lines


def read_config_file(path) -> dict:
    """Flat ``{dotted.key: raw string}`` from an INI file or an output CSV header."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PointCloudIOError(f"cannot read config {path}: {exc}") from exc
    flat = {}
    if any(line.startswith("[") for line in text.splitlines()):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise InvalidArgumentError(f"malformed config {path}: {exc}") from exc
        for section in parser.sections():
            for name, value in parser.items(section):
                flat[f"{section}.{name}"] = value
        return flat
    for line in text.splitlines():
        if line.startswith("# ") and " =" in line:
            key, _, value = line[2:].partition(" =")
            if key in DEFAULTS:
                flat[key] = value.strip()
    return flat


# --------------------------------------------------------------------------- #
# timing
# --------------------------------------------------------------------------- #


class StageTimer:
    """Collects wall-clock seconds per named stage and logs each one."""

    def __init__(self, label: str = ""):
        self.label = label
        self.times: dict[str, float] = {}

    def __call__(self, stage: str):
        timer = self

        class _Stage:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                elapsed = time.perf_counter() - self.start
                timer.times[stage] = timer.times.get(stage, 0.0) + elapsed
                log.info("%s%s: %.3f s", f"[{timer.label}] " if timer.label else "", stage, elapsed)
                return False

        return _Stage()

    @property
    def total(self) -> float:
        return sum(self.times.values())


# --------------------------------------------------------------------------- #
# pipeline pieces
# --------------------------------------------------------------------------- #


def make_cloud(cfg: ExperimentConfig, N: int | None = None, seed: int | None = None) -> PointCloud:
    N = cfg["manifold.N"] if N is None else N
    seed = cfg["manifold.seed"] if seed is None else seed
    if cfg["manifold.input"]:
        return load_point_cloud(cfg["manifold.input"], cfg["manifold.intrinsic_dim"])
    model = Model.parse(cfg["manifold.model"])
    if model is Model.SPHERE2:
        return sample_sphere(N, cfg["manifold.density"], seed)
    if model is Model.FLAT_TORUS2:
        return sample_flat_torus(N, seed)
    if model is Model.CIRCLE1:
        return sample_circle(N, seed)
    raise InvalidArgumentError("External clouds need manifold.input")


def resolve_epsilon(cfg: ExperimentConfig, h: float) -> float:
    if cfg["kernel.epsilon"]:
        return float(cfg["kernel.epsilon"])
    return h ** (2.0 + cfg["kernel.alpha"])


def resolve_shift(cfg: ExperimentConfig, h: float) -> float:
    """``kernel.epsilon_shift``: a number, or ``coupled`` for ``h**(1 + alpha)``."""
    raw = str(cfg["kernel.epsilon_shift"]).strip().lower()
    if raw in ("coupled", "h^(1+alpha)"):
        return h ** (1.0 + cfg["kernel.alpha"])
    try:
        value = float(raw)
    except ValueError:
        raise InvalidArgumentError(f"kernel.epsilon_shift must be a number or 'coupled', got {raw!r}") from None
    if value < 0:
        raise InvalidArgumentError("kernel.epsilon_shift must be ≥ 0")
    return value


def regime_warning(h: float, epsilon: float) -> str | None:
    """Message when ``epsilon`` is not ``h**(2 + alpha)`` for some alpha in [1, 2]."""
    if not (0 < h < 1):
        return f"h={h} outside (0, 1): the epsilon = h^(2+alpha) regime is undefined"
    alpha = math.log(epsilon) / math.log(h) - 2.0
    if not (1.0 - 1e-9 <= alpha <= 2.0 + 1e-9):
        return f"epsilon={epsilon:.6g} corresponds to alpha={alpha:.3f}, outside [1, 2]"
    return None


def make_state(cfg: ExperimentConfig, cloud: PointCloud, h: float):
    j0 = cfg["state.j0"]
    if not 0 <= j0 < cloud.N:
        raise InvalidArgumentError(f"state.j0={j0} out of range for N={cloud.N}")
    direction = parse_list(cfg["state.direction"])
    mode = cfg["state.xi"]
    if mode == "tangent":
        if cloud.model is Model.EXTERNAL:
            raise InvalidArgumentError("tangent momenta need a model manifold; use state.xi = neighbor")
        if direction:
            v = tangent_project(cloud.model, cloud.points[j0], np.array(direction))
            xi = v / np.linalg.norm(v)
        else:
            xi = default_momentum(cloud, j0)
        return make_state_tangent(cloud, j0, xi, h)
    if mode == "neighbor":
        if direction:
            jstar = pick_neighbor(cloud, j0, np.array(direction))
        elif cloud.model is not Model.EXTERNAL:
            jstar = pick_neighbor(cloud, j0, default_momentum(cloud, j0))
        else:
            dist = np.linalg.norm(cloud.points - cloud.points[j0], axis=1)
            dist[dist == 0] = np.inf
            jstar = int(np.argmin(dist))
        return make_state_neighbor(cloud, j0, jstar, h)
    raise InvalidArgumentError(f"state.xi must be 'tangent' or 'neighbor', got {mode!r}")


def kernel_config(cfg: ExperimentConfig, epsilon: float, n: int) -> KernelConfig:
    return KernelConfig(
        epsilon=epsilon,
        lam=cfg["kernel.lambda"],
        intrinsic_dim=n,
        truncation_radius=cfg["kernel.truncation_radius"],
        storage=cfg["kernel.storage"],
    )


def recovery_config(cfg: ExperimentConfig, h: float) -> RecoveryConfig:
    explicit = float(cfg["kernel.epsilon"]) if cfg["kernel.epsilon"] else None
    return RecoveryConfig(
        h=h,
        t_grid=tuple(parse_list(cfg["recovery.t_grid"])),
        alpha=cfg["kernel.alpha"],
        epsilon_shift=resolve_shift(cfg, h),
        c_in=cfg["recovery.c_in"],
        c_out=cfg["recovery.c_out"],
        use_cutoff=cfg["recovery.use_cutoff"],
        local_mean=cfg["recovery.local_mean"],
        epsilon_override=explicit,
    )


def run_trace(cfg: ExperimentConfig, N: int | None = None, seed: int | None = None, h: float | None = None,
              timer: StageTimer | None = None):
    """Full pipeline: cloud -> operators -> decomposition -> state -> trace."""
    timer = timer or StageTimer()
    h = cfg["state.h"] if h is None else h
    with timer("sampling"):
        cloud = make_cloud(cfg, N, seed)
    rcfg = recovery_config(cfg, h)
    warning = regime_warning(h, rcfg.epsilon)
    if warning:
        log.warning(warning)
    stage = "assembly"
    try:
        with timer("assembly"):
            ops = build_graph_operators(cloud, kernel_config(cfg, rcfg.epsilon, cloud.intrinsic_dim))
        stage = "eig"
        with timer("eig"):
            decomp = decompose(ops)
        stage = "state"
        state = make_state(cfg, cloud, h)
        if state.accuracy_warning:
            log.info("neighbor chord exceeds h^(n/4+2); momentum estimate is outside its accuracy regime")
        stage = "propagation"
        with timer("propagation"):
            trace = trace_geodesic(cloud, ops, decomp, state, rcfg)
    except GeoflowError as exc:
        raise type(exc)(f"stage {stage}: {exc}") from exc
    return cloud, trace


# --------------------------------------------------------------------------- #
# commands
# --------------------------------------------------------------------------- #


def _out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg["output.dir"])
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PointCloudIOError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _write(path: Path, lines: list[str]) -> Path:
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise PointCloudIOError(f"cannot write {path}: {exc}") from exc
    return path


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else repr(float(value))
    return str(value)


def cmd_sample(cfg: ExperimentConfig) -> Path:
    cloud = make_cloud(cfg)
    path = _out_dir(cfg) / "sample.csv"
    header = ["# command = sample"] + cfg.echo(("manifold",))
    save_point_cloud(cloud, path)
    body = path.read_text(encoding="utf-8")
    return _write(path, header + body.rstrip("\n").split("\n"))


def cmd_trace(cfg: ExperimentConfig) -> Path:
    timer = StageTimer("trace")
    cloud, trace = run_trace(cfg, timer=timer)
    path = _out_dir(cfg) / "trace.csv"
    save_trace(trace, path)
    body = path.read_text(encoding="utf-8").rstrip("\n").split("\n")
    header = ["# command = trace"] + cfg.echo(("manifold", "kernel", "state", "recovery"))
    return _write(path, header + body)


# ---- sweep ------------------------------------------------------------------


SWEEP_COLUMNS = ["N", "h", "epsilon", "seed", "t", "err_max", "err_mean", "c_tN", "status"]


def _sweep_point(args):
    values, N, h, seed = args
    cfg = ExperimentConfig(values)
    timer = StageTimer(f"N={N} h={h} seed={seed}")
    eps = resolve_epsilon(cfg, h)
    try:
        _, trace = run_trace(cfg, N=N, seed=seed, h=h, timer=timer)
    except GeoflowError as exc:
        return [{"N": N, "h": h, "epsilon": eps, "seed": seed, "t": None, "err_max": None, "err_mean": None,
                 "c_tN": None, "status": f"failed: {exc}".replace(",", ";"), "wall_time": timer.total}]
    return [
        {"N": N, "h": h, "epsilon": eps, "seed": seed, "t": float(t), "err_max": float(a), "err_mean": float(b),
         "c_tN": float(c), "status": "ok", "wall_time": timer.total}
        for t, a, b, c in zip(trace.t, trace.err_max, trace.err_mean, trace.c_tN)
    ]


def fit_slope(hs, errs) -> float:
    """Least-squares slope of ``log(err)`` against ``log(h)``; NaN if fewer than two usable points."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    ok = np.isfinite(errs) & (errs > 0)
    if ok.sum() < 2 or np.unique(hs[ok]).size < 2:
        return math.nan
    return float(np.polyfit(np.log(hs[ok]), np.log(errs[ok]), 1)[0])


def aggregate_sweep(rows: list[dict]) -> list[dict]:
    """Per ``(N, h)`` medians over successful rows, plus per-``N`` log-log slopes."""
    ok = [r for r in rows if r["status"] == "ok"]
    out = []
    for N in sorted({r["N"] for r in rows}):
        hs = sorted({r["h"] for r in rows if r["N"] == N}, reverse=True)
        med_max, med_mean = [], []
        for h in hs:
            sel = [r for r in ok if r["N"] == N and r["h"] == h]
            med_max.append(float(np.median([r["err_max"] for r in sel])) if sel else math.nan)
            med_mean.append(float(np.median([r["err_mean"] for r in sel])) if sel else math.nan)
        slope_max, slope_mean = fit_slope(hs, med_max), fit_slope(hs, med_mean)
        for h, a, b in zip(hs, med_max, med_mean):
            out.append({"N": N, "h": h, "median_err_max": a, "median_err_mean": b,
                        "slope_err_max": slope_max, "slope_err_mean": slope_mean})
    return out


@dataclass
class SweepResult:
    rows: list[dict]
    aggregates: list[dict]


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    N_list = parse_list(cfg["sweep.N_list"], int)
    h_list = parse_list(cfg["sweep.h_list"])
    if not N_list or not h_list:
        raise InvalidArgumentError("sweep.N_list and sweep.h_list must be non-empty")
    seeds = range(cfg["sweep.seed_start"], cfg["sweep.seed_start"] + cfg["sweep.seeds"])
    jobs = [(cfg.values, N, h, s) for N in N_list for h in h_list for s in seeds]
    workers = max(1, cfg["run.workers"])
    if workers == 1:
        chunks = [_sweep_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_point, jobs))
    rows = [row for chunk in chunks for row in chunk]
    return SweepResult(rows, aggregate_sweep(rows))


AGG_COLUMNS = ["N", "h", "median_err_max", "median_err_mean", "slope_err_max", "slope_err_mean"]


NOT_FITTABLE = "not-fittable"


def _fmt_agg(column: str, value) -> str:
    if column.startswith("slope") and math.isnan(value):
        return NOT_FITTABLE
    return _fmt(value)


def cmd_sweep(cfg: ExperimentConfig) -> tuple[Path, Path]:
    result = run_sweep(cfg)
    out = _out_dir(cfg)
    header = ["# command = sweep"] + cfg.echo(("manifold", "kernel", "state", "recovery", "sweep", "run"))
    cols = SWEEP_COLUMNS + (["wall_time"] if cfg["sweep.timings"] else [])
    rows_path = _write(out / "sweep_rows.csv",
                       header + [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in result.rows])
    agg_lines = [",".join(_fmt_agg(c, a[c]) for c in AGG_COLUMNS) for a in result.aggregates]
    summary_path = _write(out / "sweep_summary.csv", header + [",".join(AGG_COLUMNS)] + agg_lines)
    for a in result.aggregates:
        log.info("N=%d h=%g median err_max=%.4g err_mean=%.4g", a["N"], a["h"], a["median_err_max"],
                 a["median_err_mean"])
    return rows_path, summary_path


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def load_sweep(rows_path, summary_path, tol: float = 1e-12) -> SweepResult:
    """Read a sweep and verify the stored aggregates against those recomputed from the rows."""
    cols, raw_rows = _read_csv(rows_path)

    def num(v, kind=float):
        return None if v == "" else kind(v)

    rows = []
    for raw in raw_rows:
        r = dict(zip(cols, raw))
        rows.append({"N": int(r["N"]), "h": float(r["h"]), "epsilon": float(r["epsilon"]), "seed": int(r["seed"]),
                     "t": num(r["t"]), "err_max": num(r["err_max"]), "err_mean": num(r["err_mean"]),
                     "c_tN": num(r["c_tN"]), "status": r["status"]})
    acols, raw_agg = _read_csv(summary_path)
    stored = [{c: (math.nan if v in ("", NOT_FITTABLE) else float(v)) for c, v in zip(acols, raw)} for raw in raw_agg]
    recomputed = aggregate_sweep(rows)
    if len(stored) != len(recomputed):
        raise NumericalConsistencyError("sweep summary row count does not match the rows")
    for s, r in zip(stored, recomputed):
        for c in AGG_COLUMNS:
            a, b = float(s[c]), float(r[c])
            if math.isnan(a) and math.isnan(b):
                continue
            if not abs(a - b) <= tol * max(1.0, abs(b)):
                raise NumericalConsistencyError(f"aggregate {c} at N={r['N']} h={r['h']}: stored {a} vs {b}")
    return SweepResult(rows, recomputed)


# ---- consistency ------------------------------------------------------------


def _coordinate_extension(cloud, ops, decomp, f, coord, eval_points):
    u = cloud.points[:, coord].astype(complex)
    return nystrom_extend(cloud, ops, decomp, f, u, eval_points[:, coord], eval_points)


def run_consistency(cfg: ExperimentConfig) -> list[dict]:
    """Held-out sup discrepancy between propagations on N-sample clouds and on an M-sample proxy.

    Both clouds use the same kernel, bandwidth and time; extensions are
    compared on a fixed Fibonacci set on the sphere.
    """
    if Model.parse(cfg["manifold.model"]) is not Model.SPHERE2:
        raise InvalidArgumentError("the consistency harness uses held-out points on Sphere2")
    M = cfg["consistency.M"]
    N_list = parse_list(cfg["consistency.N_list"], int)
    if not N_list:
        raise InvalidArgumentError("consistency.N_list must be non-empty")
    t = cfg["consistency.t"]
    eps = cfg["consistency.epsilon"]
    coord = cfg["consistency.coordinate"] - 1
    eval_points = fibonacci_sphere(cfg["consistency.n_eval"])
    kcfg = kernel_config(cfg, eps, 2)
    shift = cfg["consistency.epsilon_shift"]
    if shift < 0:
        raise InvalidArgumentError("consistency.epsilon_shift must be ≥ 0")
    rows = []
    for s in range(cfg["consistency.seeds"]):
        timer = StageTimer(f"consistency seed={s}")
        base = cfg["manifold.seed"] + 1000 * s
        with timer("reference"):
            big = sample_sphere(M, cfg["manifold.density"], base + 999)
            big_ops = build_graph_operators(big, kcfg, keep_kernel=False)
            big_dec = decompose(big_ops)
            f = propagator(t, eps, big_ops.c20, shift)
            ref = _coordinate_extension(big, big_ops, big_dec, f, coord, eval_points)
        for k, N in enumerate(N_list):
            try:
                with timer(f"N={N}"):
                    # N == M compares the reference cloud with itself
                    cloud = big if N == M else sample_sphere(N, cfg["manifold.density"], base + k)
                    ops = build_graph_operators(cloud, kcfg, keep_kernel=False)
                    ext = _coordinate_extension(cloud, ops, decompose(ops), f, coord, eval_points)
                rows.append({"N": N, "M": M, "seed": s, "t": t, "epsilon": eps,
                             "discrepancy": float(np.abs(ext - ref).max()), "status": "ok"})
            except GeoflowError as exc:
                rows.append({"N": N, "M": M, "seed": s, "t": t, "epsilon": eps, "discrepancy": None,
                             "status": f"failed: {exc}".replace(",", ";")})
    return rows


def consistency_medians(rows: list[dict]) -> dict[int, float]:
    out = {}
    for N in sorted({r["N"] for r in rows}):
        vals = [r["discrepancy"] for r in rows if r["N"] == N and r["status"] == "ok"]
        out[N] = float(np.median(vals)) if vals else math.nan
    return out


def cmd_consistency(cfg: ExperimentConfig) -> Path:
    rows = run_consistency(cfg)
    cols = ["N", "M", "seed", "t", "epsilon", "discrepancy", "status"]
    header = ["# command = consistency"] + cfg.echo(("manifold", "kernel", "consistency"))
    lines = [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in rows]
    medians = consistency_medians(rows)
    lines += ["# median discrepancy per N"] + [f"# N={N}: {_fmt(v)}" for N, v in medians.items()]
    return _write(_out_dir(cfg) / "consistency.csv", header + lines)


# ---- bounds -----------------------------------------------------------------


def run_bounds(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    n = cfg["bounds.n"]
    for N in parse_list(cfg["bounds.N_list"]):
        for h in parse_list(cfg["bounds.h_list"]):
            eps = resolve_epsilon(cfg, h)
            for kind in KINDS:
                value = bernstein_bound(kind, N, n, eps, cfg["bounds.delta"], cfg["bounds.t"], cfg["bounds.K_u"],
                                        h, cfg["bounds.C"])
                rows.append({"kind": kind, "N": N, "h": h, "epsilon": eps, "bound": value})
    return rows


def cmd_bounds(cfg: ExperimentConfig) -> tuple[Path, str]:
    rows = run_bounds(cfg)
    cols = ["kind", "N", "h", "epsilon", "bound"]
    table = [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in rows]
    header = ["# command = bounds"] + cfg.echo(("kernel", "bounds"))
    path = _write(_out_dir(cfg) / "bounds.csv", header + table)
    return path, "\n".join(table)


__all__ = [
    "DEFAULTS",
    "ExperimentConfig",
    "SweepResult",
    "StageTimer",
    "read_config_file",
    "make_cloud",
    "make_state",
    "run_trace",
    "run_sweep",
    "aggregate_sweep",
    "fit_slope",
    "load_sweep",
    "run_consistency",
    "consistency_medians",
    "run_bounds",
    "cmd_sample",
    "cmd_trace",
    "cmd_sweep",
    "cmd_consistency",
    "cmd_bounds",
    "regime_warning",
]
