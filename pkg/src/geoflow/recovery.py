"""Geodesic recovery from propagated coherent states.

For every time ``t`` on the grid:

1. propagate the coherent state with the half-wave propagator,
2. take the sample maximizer of the propagated density,
3. form the cutoff-weighted extrinsic mean around the maximizer,
4. snap the mean to the nearest sample.

When the cloud comes from a model manifold the estimates are scored against
the exact geodesic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateStateError, EmptySupportError, GeoflowError, InvalidArgumentError, UnsupportedModelError
from .laplacian import GraphOperators, kernel_moments
from .sampling import (
    GeodesicQuery,
    Model,
    PointCloud,
    wrap_angle,
    format_header,
    geodesic_distance,
    geodesic_oracle,
    tangent_project,
    torus_angles,
)
from .spectral import SpectralDecomposition, wave_propagate
from .states import CoherentState, discrete_norm

__all__ = [
    "RecoveryConfig",
    "GeodesicTrace",
    "propagate_density",
    "sample_max",
    "bump_cutoff",
    "extrinsic_mean",
    "torus_local_mean",
    "oracle_momentum",
    "trace_geodesic",
    "recovery_error",
    "save_trace",
]

T_CAP = 0.9 * math.pi


@dataclass(frozen=True)
class RecoveryConfig:
    """Parameters of one recovery run.

    ``epsilon`` defaults to ``h**(2 + alpha)``; pass ``epsilon`` explicitly to
    leave that regime (``alpha`` is then informational).  Cutoff radii are
    ``c_in * sqrt(h)`` and ``c_out * sqrt(h)`` in ambient distance.
    """

    h: float
    t_grid: tuple = (0.0,)
    alpha: float = 2.0
    epsilon_shift: float = 0.0
    c_in: float = 1.0
    c_out: float = 2.0
    use_cutoff: bool = True
    local_mean: bool = False
    epsilon_override: float | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidArgumentError("h must be > 0")
        if self.epsilon_override is None and not 1.0 <= self.alpha <= 2.0:
            raise InvalidArgumentError(f"alpha must lie in [1, 2], got {self.alpha}")
        if self.epsilon_override is not None and not self.epsilon_override > 0:
            raise InvalidArgumentError("epsilon must be > 0")
        if self.epsilon_shift < 0:
            raise InvalidArgumentError("epsilon_shift must be ≥ 0")
        if not 0 < self.c_in < self.c_out:
            raise InvalidArgumentError("cutoff radii must satisfy 0 < c_in < c_out")
        grid = tuple(float(t) for t in self.t_grid)
        if not grid:
            raise InvalidArgumentError("t_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidArgumentError("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", grid)

    @property
    def epsilon(self) -> float:
        if self.epsilon_override is not None:
            return float(self.epsilon_override)
        return self.h ** (2.0 + self.alpha)

    @property
    def radii(self) -> tuple[float, float]:
        root = math.sqrt(self.h)
        return self.c_in * root, self.c_out * root


@dataclass
class GeodesicTrace:
    """Per-time estimates; error arrays hold NaN when no oracle exists."""

    t: np.ndarray
    max_index: np.ndarray
    mean_point: np.ndarray
    snapped_index: np.ndarray
    c_tN: np.ndarray
    err_max: np.ndarray
    err_mean: np.ndarray
    oracle_points: np.ndarray | None = None
    local_index: np.ndarray | None = None
    err_local: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.shape[0]


def _c20_default(n: int) -> float:
    c0, c2 = kernel_moments("gaussian", n)
    return math.sqrt(2 * c0 / c2)


def propagate_density(decomp: SpectralDecomposition, state: CoherentState, t: float, cfg: RecoveryConfig,
                      c20: float | None = None, amplitudes=None):
    """Return ``(v_t, density, c_tN)`` with ``<density, 1>_N = 1``.

    ``amplitudes`` overrides ``state.amplitudes`` (used for non-coherent inputs).
    """
    c20 = _c20_default(2) if c20 is None else c20
    u = state.amplitudes if amplitudes is None else amplitudes
    v = wave_propagate(decomp, t, cfg.epsilon, cfg.epsilon_shift, c20, u)
    c = discrete_norm(v)
    if c == 0:
        raise DegenerateStateError(f"propagated state vanished at t={t}")
    density = np.abs(v) ** 2 / c ** 2
    return v, density, c


def sample_max(density) -> int:
    """Index of the largest density value (first occurrence on ties)."""
    density = np.asarray(density)
    if density.size == 0:
        raise InvalidArgumentError("density is empty")
    return int(np.argmax(density))


def bump_cutoff(center_point, radii, cloud: PointCloud) -> np.ndarray:
    """Smooth radial cutoff: 1 inside ``r_in``, 0 beyond ``r_out``, mollifier bridge between."""
    r_in, r_out = radii
    if not 0 < r_in < r_out:
        raise InvalidArgumentError(f"cutoff radii must satisfy 0 < r_in < r_out, got {radii}")
    rho = np.linalg.norm(cloud.points - np.asarray(center_point, dtype=float), axis=1)
    s = np.clip((rho - r_in) / (r_out - r_in), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        bridge = np.exp(1.0 - 1.0 / (1.0 - s * s))
    return np.where(rho <= r_in, 1.0, np.where(rho >= r_out, 0.0, bridge))


def _nearest(points: np.ndarray, target: np.ndarray) -> int:
    return int(np.argmin(np.linalg.norm(points - target, axis=1)))


def extrinsic_mean(density, chi, cloud: PointCloud) -> tuple[np.ndarray, int]:
    """``<density, chi * X_d>_N`` per ambient coordinate, and the nearest sample to it."""
    weights = np.asarray(density) * np.asarray(chi)
    if not np.any(weights > 0):
        raise EmptySupportError("density vanishes on the support of the cutoff")
    mean = weights @ cloud.points / cloud.N
    return mean, _nearest(cloud.points, mean)


def torus_local_mean(density, chi, cloud: PointCloud) -> tuple[np.ndarray, int]:
    """Angle-chart mean on the flat torus: weighted circular mean of each angle.

    The nearest sample is found with wrap-aware angular distance.
    """
    if cloud.model is not Model.FLAT_TORUS2:
        raise UnsupportedModelError("the local angle-chart mean is only available on FlatTorus2")
    weights = np.asarray(density) * np.asarray(chi)
    if not np.any(weights > 0):
        raise EmptySupportError("density vanishes on the support of the cutoff")
    theta, phi = torus_angles(cloud.points)
    mean = np.array([
        math.atan2(weights @ np.sin(theta), weights @ np.cos(theta)),
        math.atan2(weights @ np.sin(phi), weights @ np.cos(phi)),
    ])
    gap = np.hypot(wrap_angle(theta - mean[0]), wrap_angle(phi - mean[1]))
    return mean, int(np.argmin(gap))


def oracle_momentum(cloud: PointCloud, state: CoherentState) -> np.ndarray:
    """Unit tangent initial velocity used for scoring (tangent part of the state momentum)."""
    x0 = cloud.points[state.base_index]
    xi = tangent_project(cloud.model, x0, state.momentum)
    norm = np.linalg.norm(xi)
    if norm == 0:
        raise InvalidArgumentError("state momentum has no tangent component")
    return xi / norm


def trace_geodesic(cloud: PointCloud, graph_ops: GraphOperators, decomp: SpectralDecomposition,
                   state: CoherentState, cfg: RecoveryConfig) -> GeodesicTrace:
    """Run the four-step recovery on every time of ``cfg.t_grid``."""
    N = cloud.N
    if not (graph_ops.N == decomp.N == state.amplitudes.shape[0] == N):
        raise InvalidArgumentError("cloud, operators, decomposition and state disagree on N")
    scored = cloud.model is not Model.EXTERNAL
    if scored and max(abs(t) for t in cfg.t_grid) > T_CAP:
        raise InvalidArgumentError(f"|t| must stay below 0.9*pi = {T_CAP:.6f} on {cloud.model.value}")
    if scored:
        x0 = cloud.points[state.base_index]
        xi0 = oracle_momentum(cloud, state)
    local = cfg.local_mean and cloud.model is Model.FLAT_TORUS2

    T = len(cfg.t_grid)
    out = {
        "max": np.zeros(T, dtype=int), "snap": np.zeros(T, dtype=int), "mean": np.zeros((T, cloud.D)),
        "c": np.zeros(T), "emax": np.full(T, np.nan), "emean": np.full(T, np.nan),
        "local": np.zeros(T, dtype=int), "elocal": np.full(T, np.nan), "oracle": np.full((T, cloud.D), np.nan),
    }
    radii = cfg.radii
    for k, t in enumerate(cfg.t_grid):
        try:
            _, density, c = propagate_density(decomp, state, t, cfg, graph_ops.c20)
            j_max = sample_max(density)
            chi = bump_cutoff(cloud.points[j_max], radii, cloud) if cfg.use_cutoff else np.ones(N)
            mean, j_snap = extrinsic_mean(density, chi, cloud)
            if local:
                _, j_local = torus_local_mean(density, chi, cloud)
        except GeoflowError as exc:
            raise type(exc)(f"at t={t}: {exc}") from exc
        out["max"][k], out["snap"][k], out["mean"][k], out["c"][k] = j_max, j_snap, mean, c
        if scored:
            x_t = geodesic_oracle(cloud.model, GeodesicQuery(x0, xi0, t))
            out["oracle"][k] = x_t
            out["emax"][k] = geodesic_distance(cloud.model, cloud.points[j_max], x_t)
            out["emean"][k] = geodesic_distance(cloud.model, cloud.points[j_snap], x_t)
            if local:
                out["local"][k] = j_local
                out["elocal"][k] = geodesic_distance(cloud.model, cloud.points[j_local], x_t)

    meta = {
        "h": cfg.h, "alpha": cfg.alpha, "epsilon": cfg.epsilon, "epsilon_shift": cfg.epsilon_shift,
        "c_in": cfg.c_in, "c_out": cfg.c_out, "use_cutoff": cfg.use_cutoff, "j0": state.base_index,
        "lambda": graph_ops.lam, "model": cloud.model.value, "N": N,
    }
    return GeodesicTrace(
        np.array(cfg.t_grid), out["max"], out["mean"], out["snap"], out["c"], out["emax"], out["emean"],
        out["oracle"] if scored else None,
        out["local"] if local else None, out["elocal"] if local else None, meta,
    )


def recovery_error(trace: GeodesicTrace, model) -> list[dict]:
    """Per-time ``{t, err_max, err_mean}`` records."""
    if Model.parse(model) is Model.EXTERNAL or trace.oracle_points is None:
        raise UnsupportedModelError("recovery errors need a model manifold with a geodesic oracle")
    return [
        {"t": float(t), "err_max": float(a), "err_mean": float(b)}
        for t, a, b in zip(trace.t, trace.err_max, trace.err_mean)
    ]


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    return "" if math.isnan(value) else repr(value)


def save_trace(trace: GeodesicTrace, path, header_meta: dict | None = None) -> None:
    D = trace.mean_point.shape[1]
    meta = dict(trace.meta)
    if header_meta:
        meta.update(header_meta)
    cols = ["t", "max_index", "snap_index"] + [f"mean_x_{d + 1}" for d in range(D)] + ["c_tN", "err_max", "err_mean"]
    if trace.local_index is not None:
        cols += ["local_index", "err_local"]
    lines = [format_header(meta), ",".join(cols)]
    for k in range(len(trace)):
        row = [trace.t[k], trace.max_index[k], trace.snapped_index[k], *trace.mean_point[k], trace.c_tN[k],
               trace.err_max[k], trace.err_mean[k]]
        if trace.local_index is not None:
            row += [trace.local_index[k], trace.err_local[k]]
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
