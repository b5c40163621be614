"""Point clouds on model manifolds, their exact geodesics, and CSV I/O.

Three model manifolds are supported, each with a closed-form geodesic flow:

* ``Sphere2``    -- the unit sphere in R^3,
* ``FlatTorus2`` -- the flat torus embedded as (cos a, sin a, cos b, sin b) in R^4,
* ``Circle1``    -- the unit circle in R^2.

Random draws use numpy's ``PCG64`` bit generator (``numpy.random.default_rng``),
whose stream is stable across platforms for a given seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, PointCloudIOError, UnsupportedModelError

__all__ = [
    "Model",
    "PointCloud",
    "GeodesicQuery",
    "sample_sphere",
    "sample_flat_torus",
    "sample_circle",
    "torus_embed",
    "torus_angles",
    "wrap_angle",
    "format_header",
    "tangent_project",
    "geodesic_oracle",
    "geodesic_distance",
    "fibonacci_sphere",
    "load_point_cloud",
    "save_point_cloud",
]

_NORM_TOL = 1e-12


class Model(str, enum.Enum):
    SPHERE2 = "Sphere2"
    FLAT_TORUS2 = "FlatTorus2"
    CIRCLE1 = "Circle1"
    EXTERNAL = "External"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "").replace("-", "")
        aliases = {
            "sphere2": cls.SPHERE2, "sphere": cls.SPHERE2, "s2": cls.SPHERE2,
            "flattorus2": cls.FLAT_TORUS2, "torus": cls.FLAT_TORUS2,
            "flattorus": cls.FLAT_TORUS2, "t2": cls.FLAT_TORUS2,
            "circle1": cls.CIRCLE1, "circle": cls.CIRCLE1, "s1": cls.CIRCLE1,
            "external": cls.EXTERNAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidArgumentError(f"unknown manifold model {value!r}") from None


_INTRINSIC_DIM = {Model.SPHERE2: 2, Model.FLAT_TORUS2: 2, Model.CIRCLE1: 1}
_AMBIENT_DIM = {Model.SPHERE2: 3, Model.FLAT_TORUS2: 4, Model.CIRCLE1: 2}


@dataclass(frozen=True)
class PointCloud:
    """N samples in R^D, with the intrinsic dimension and the model they came from.

    The ``points`` array is made read-only on construction.
    """

    points: np.ndarray
    intrinsic_dim: int
    model: Model = Model.EXTERNAL
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2:
            raise InvalidArgumentError("points must be an N x D array")
        n_pts, dim = pts.shape
        if n_pts < 2:
            raise InvalidArgumentError("N must be ≥ 2")
        n = int(self.intrinsic_dim)
        if n < 1:
            raise InvalidArgumentError("intrinsic_dim must be a positive integer")
        if dim < n + 1:
            raise InvalidArgumentError(f"ambient dimension D={dim} must be ≥ n+1={n + 1}")
        model = Model.parse(self.model)
        if model is not Model.EXTERNAL:
            if dim != _AMBIENT_DIM[model] or n != _INTRINSIC_DIM[model]:
                raise InvalidArgumentError(f"{model.value} needs D={_AMBIENT_DIM[model]}, n={_INTRINSIC_DIM[model]}")
            _check_on_model(model, pts, _NORM_TOL)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "intrinsic_dim", n)
        object.__setattr__(self, "model", model)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]

    def metadata(self) -> dict:
        return {
            "model": self.model.value,
            "n": self.intrinsic_dim,
            "seed": "" if self.seed is None else self.seed,
            "N": self.N,
            "D": self.D,
        }


@dataclass(frozen=True)
class GeodesicQuery:
    """Initial point, unit initial velocity (ambient coordinates) and time."""

    x0: np.ndarray
    xi0: np.ndarray
    t: float

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        xi0 = np.asarray(self.xi0, dtype=float)
        if x0.shape != xi0.shape or x0.ndim != 1:
            raise InvalidArgumentError("x0 and xi0 must be vectors of equal length")
        if abs(np.linalg.norm(xi0) - 1.0) > 1e-10:
            raise InvalidArgumentError("xi0 must have unit length")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "xi0", xi0)
        object.__setattr__(self, "t", float(self.t))


def _check_on_model(model: Model, pts: np.ndarray, tol: float) -> None:
    if model is Model.SPHERE2 or model is Model.CIRCLE1:
        err = np.abs(np.linalg.norm(pts, axis=1) - 1.0).max()
    else:
        err = max(
            np.abs(np.linalg.norm(pts[:, :2], axis=1) - 1.0).max(),
            np.abs(np.linalg.norm(pts[:, 2:], axis=1) - 1.0).max(),
        )
    if err > tol:
        raise InvalidArgumentError(f"points are off the {model.value} model by {err:.3e}")


def _check_count(N) -> int:
    if int(N) != N or N < 2:
        raise InvalidArgumentError("N must be ≥ 2")
    return int(N)


def _unit_rows(pts: np.ndarray) -> np.ndarray:
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def sample_sphere(N: int, density: str = "uniform", seed: int = 0) -> PointCloud:
    """Draw ``N`` i.i.d. points on the unit sphere S^2.

    ``density="cosine-tilted"`` draws from the density proportional to
    ``1 + z/2`` by rejection from the uniform law (envelope constant 3/2).
    """
    N = _check_count(N)
    rng = np.random.default_rng(seed)
    if density == "uniform":
        pts = _unit_rows(rng.standard_normal((N, 3)))
    elif density in ("cosine-tilted", "cosine_tilted", "tilted"):
        accepted = []
        have = 0
        while have < N:
            batch = _unit_rows(rng.standard_normal((2 * N, 3)))
            keep = rng.random(2 * N) * 1.5 < 1.0 + 0.5 * batch[:, 2]
            accepted.append(batch[keep])
            have += int(keep.sum())
        pts = np.concatenate(accepted)[:N]
    else:
        raise InvalidArgumentError(f"unknown density {density!r}")
    return PointCloud(pts, 2, Model.SPHERE2, seed)


def torus_embed(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)], axis=-1)


def torus_angles(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    return np.arctan2(x[..., 1], x[..., 0]), np.arctan2(x[..., 3], x[..., 2])


def sample_flat_torus(N: int, seed: int = 0) -> PointCloud:
    """Uniform samples on the flat torus with metric dθ² + dφ²."""
    N = _check_count(N)
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(N, 2))
    return PointCloud(torus_embed(angles[:, 0], angles[:, 1]), 2, Model.FLAT_TORUS2, seed)


def sample_circle(N: int, seed: int = 0) -> PointCloud:
    N = _check_count(N)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=N)
    return PointCloud(np.column_stack([np.cos(theta), np.sin(theta)]), 1, Model.CIRCLE1, seed)


def fibonacci_sphere(n_points: int = 200) -> np.ndarray:
    """Deterministic, quasi-uniform points on S^2 (golden-angle spiral)."""
    k = np.arange(n_points) + 0.5
    z = 1.0 - 2.0 * k / n_points
    r = np.sqrt(1.0 - z * z)
    golden = np.pi * (3.0 - math.sqrt(5.0))
    theta = golden * k
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def _torus_frame(x) -> tuple[np.ndarray, np.ndarray]:
    theta, phi = torus_angles(x)
    e_theta = np.array([-np.sin(theta), np.cos(theta), 0.0, 0.0])
    e_phi = np.array([0.0, 0.0, -np.sin(phi), np.cos(phi)])
    return e_theta, e_phi


def tangent_project(model, x, v) -> np.ndarray:
    """Orthogonal projection of the ambient vector ``v`` onto the tangent space at ``x``."""
    model = Model.parse(model)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if model is Model.SPHERE2 or model is Model.CIRCLE1:
        return v - np.dot(v, x) * x
    if model is Model.FLAT_TORUS2:
        e_theta, e_phi = _torus_frame(x)
        return np.dot(v, e_theta) * e_theta + np.dot(v, e_phi) * e_phi
    raise UnsupportedModelError("External clouds have no analytic tangent space")


def geodesic_oracle(model, query: GeodesicQuery) -> np.ndarray:
    """Exact point reached at time ``query.t`` along the unit-speed geodesic."""
    model = Model.parse(model)
    x0, xi0, t = query.x0, query.xi0, query.t
    if model is Model.SPHERE2:
        if abs(np.dot(x0, xi0)) > 1e-10:
            raise InvalidArgumentError("xi0 is not tangent to the sphere at x0")
        return math.cos(t) * x0 + math.sin(t) * xi0
    if model is Model.FLAT_TORUS2:
        e_theta, e_phi = _torus_frame(x0)
        theta, phi = torus_angles(x0)
        return torus_embed(theta + t * np.dot(xi0, e_theta), phi + t * np.dot(xi0, e_phi))
    if model is Model.CIRCLE1:
        theta = math.atan2(x0[1], x0[0])
        speed = -x0[1] * xi0[0] + x0[0] * xi0[1]
        return np.array([math.cos(theta + t * speed), math.sin(theta + t * speed)])
    raise UnsupportedModelError("no geodesic oracle for External clouds")


def wrap_angle(angle):
    """Map angles to (-pi, pi]."""
    wrapped = np.mod(angle + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def geodesic_distance(model, x, y):
    """Intrinsic distance between ambient points ``x`` and ``y`` (broadcasts over rows)."""
    model = Model.parse(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if model is Model.SPHERE2:
        # atan2 keeps precision near 0 and pi where arccos of the dot product does not
        cross = np.linalg.norm(np.cross(x, y), axis=-1)
        return np.arctan2(cross, np.sum(x * y, axis=-1))
    if model is Model.FLAT_TORUS2:
        tx, px = torus_angles(x)
        ty, py = torus_angles(y)
        return np.hypot(wrap_angle(ty - tx), wrap_angle(py - px))
    if model is Model.CIRCLE1:
        return np.abs(wrap_angle(np.arctan2(y[..., 1], y[..., 0]) - np.arctan2(x[..., 1], x[..., 0])))
    raise UnsupportedModelError("no geodesic distance for External clouds")


def load_point_cloud(path, intrinsic_dim: int) -> PointCloud:
    """Read a comma-separated point cloud, one point per row.

    Lines starting with ``#`` are skipped, as are blank lines.  Errors report
    1-based data-row and column numbers.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PointCloudIOError(f"cannot read {path}: {exc}") from exc
    rows = []
    width = None
    data_row = 0
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        data_row += 1
        cells = stripped.split(",")
        values = []
        for col, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise PointCloudIOError(f"non-numeric cell {cell.strip()!r} in {path}", data_row, col) from None
        if width is None:
            width = len(values)
            if width < 2:
                raise PointCloudIOError(f"need at least 2 columns in {path}", data_row, width)
        elif len(values) != width:
            raise PointCloudIOError(f"expected {width} columns, found {len(values)}", data_row, len(values))
        rows.append(values)
    if len(rows) < 2:
        raise InvalidArgumentError("N must be ≥ 2")
    return PointCloud(np.array(rows), intrinsic_dim, Model.EXTERNAL, None)


def format_header(meta: dict) -> str:
    return "# " + ", ".join(f"{k}={v}" for k, v in meta.items())


def save_point_cloud(cloud: PointCloud, path, extra_meta: dict | None = None) -> None:
    meta = cloud.metadata()
    if extra_meta:
        meta.update(extra_meta)
    lines = [format_header(meta)]
    lines.extend(",".join(repr(float(v)) for v in row) for row in cloud.points)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
