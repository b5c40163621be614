"""Kernel matrices, degree functions and λ-renormalized averaging operators.

With a Gaussian profile ``k(s) = exp(-s)`` and bandwidth ``epsilon`` the
pipeline is::

    K_ij      = epsilon**(-n/2) * exp(-|X_i - X_j|**2 / epsilon)
    p_eps     = K @ 1 / N
    K_lam_ij  = K_ij / (p_eps_i * p_eps_j)**lam
    p_lam     = K_lam @ 1 / N
    A         = diag(1 / (N * p_lam)) @ K_lam          (row stochastic)

The graph Laplacian ``(2 c0 / c2) (I - A) / epsilon`` is never materialized;
downstream code works with ``A`` and the scalar ``scale``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import DegenerateGraphError, InvalidArgumentError, PointCloudIOError
from .sampling import PointCloud

__all__ = [
    "KernelConfig",
    "GraphOperators",
    "kernel_moments",
    "build_kernel_matrix",
    "degree_vector",
    "lambda_renormalize",
    "averaging_operator",
    "graph_laplacian_scale",
    "build_graph_operators",
    "extension_kernel",
    "save_graph_operators",
    "load_graph_operators",
]

BUNDLE_VERSION = 1
SPARSE_FILL_THRESHOLD = 0.2


@dataclass(frozen=True)
class KernelConfig:
    """Kernel parameters.

    ``truncation_radius`` is measured in units of ``sqrt(epsilon)``: entries with
    ``|X_i - X_j|**2 / epsilon > truncation_radius**2`` are zeroed.  ``storage``
    is ``"dense"``, ``"sparse"`` or ``"auto"`` (sparse when the fill is below 20%).
    """

    epsilon: float
    lam: float = 1.0
    intrinsic_dim: int = 2
    truncation_radius: float = 6.0
    kind: str = "gaussian"
    storage: str = "dense"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.lam >= 0:
            raise InvalidArgumentError(f"lambda must be ≥ 0, got {self.lam}")
        if not self.truncation_radius >= 3:
            raise InvalidArgumentError("truncation_radius must be ≥ 3")
        if self.kind != "gaussian":
            raise InvalidArgumentError(f"unsupported kernel kind {self.kind!r}")
        if self.storage not in ("dense", "sparse", "auto"):
            raise InvalidArgumentError(f"unknown storage mode {self.storage!r}")
        if int(self.intrinsic_dim) < 1:
            raise InvalidArgumentError("intrinsic_dim must be ≥ 1")


@dataclass(frozen=True)
class GraphOperators:
    """Assembled operators for one cloud and one kernel configuration.

    ``K`` and ``A`` are either dense arrays or CSR matrices; ``K`` may be
    ``None`` for bundles loaded without it.
    """

    K: np.ndarray | sp.csr_matrix | None
    p_eps: np.ndarray
    p_lambda: np.ndarray
    A: np.ndarray | sp.csr_matrix
    c0: float
    c2: float
    config: KernelConfig = field(repr=False)

    @property
    def epsilon(self) -> float:
        return self.config.epsilon

    @property
    def lam(self) -> float:
        return self.config.lam

    @property
    def N(self) -> int:
        return self.p_eps.shape[0]

    @property
    def scale(self) -> float:
        return graph_laplacian_scale(self.epsilon, self.c0, self.c2)[0]

    @property
    def c20(self) -> float:
        return graph_laplacian_scale(self.epsilon, self.c0, self.c2)[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.A)


def kernel_moments(kind: str = "gaussian", n: int = 2) -> tuple[float, float]:
    """Zeroth and second moments of ``k(|z|^2)`` over R^n.

    For the Gaussian these are ``pi**(n/2)`` and ``pi**(n/2) / 2``.
    """
    if kind != "gaussian":
        raise InvalidArgumentError(f"unsupported kernel kind {kind!r}")
    if n < 1:
        raise InvalidArgumentError("n must be ≥ 1")
    c0 = math.pi ** (n / 2)
    return c0, c0 / 2


def graph_laplacian_scale(epsilon: float, c0: float, c2: float) -> tuple[float, float]:
    """Return ``(scale, c20)`` with ``scale = (2 c0/c2)/epsilon`` and ``c20 = sqrt(2 c0/c2)``."""
    if not epsilon > 0:
        raise InvalidArgumentError("epsilon must be > 0")
    ratio = 2.0 * c0 / c2
    return ratio / epsilon, math.sqrt(ratio)


def _gaussian(sq_dist, cfg: KernelConfig):
    vals = cfg.epsilon ** (-cfg.intrinsic_dim / 2) * np.exp(-sq_dist / cfg.epsilon)
    return np.where(sq_dist / cfg.epsilon > cfg.truncation_radius ** 2, 0.0, vals)


def _sparse_kernel(points: np.ndarray, cfg: KernelConfig) -> sp.csr_matrix:
    radius = cfg.truncation_radius * math.sqrt(cfg.epsilon)
    tree = cKDTree(points)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    i, j = pairs[:, 0], pairs[:, 1]
    sq = np.sum((points[i] - points[j]) ** 2, axis=1)
    vals = _gaussian(sq, cfg)
    N = points.shape[0]
    diag = np.arange(N)
    rows = np.concatenate([i, j, diag])
    cols = np.concatenate([j, i, diag])
    data = np.concatenate([vals, vals, np.full(N, cfg.epsilon ** (-cfg.intrinsic_dim / 2))])
    return sp.csr_matrix((data, (rows, cols)), shape=(N, N))


def build_kernel_matrix(cloud: PointCloud, cfg: KernelConfig):
    """Truncated Gaussian kernel matrix over the samples (diagonal always kept)."""
    if cfg.intrinsic_dim != cloud.intrinsic_dim:
        raise InvalidArgumentError(
            f"kernel intrinsic_dim={cfg.intrinsic_dim} does not match cloud n={cloud.intrinsic_dim}"
        )
    pts = cloud.points
    if cfg.storage == "dense":
        return _gaussian(cdist(pts, pts, "sqeuclidean"), cfg)
    K = _sparse_kernel(pts, cfg)
    if cfg.storage == "auto" and K.nnz >= SPARSE_FILL_THRESHOLD * cloud.N ** 2:
        return K.toarray()
    return K


def degree_vector(K) -> np.ndarray:
    N = K.shape[0]
    p = np.asarray(K.sum(axis=1)).ravel() / N
    zero = np.flatnonzero(p <= 0)
    if zero.size:
        raise DegenerateGraphError(f"isolated sample(s) at this epsilon: rows {zero[:10].tolist()}")
    return p


def lambda_renormalize(K, p_eps: np.ndarray, lam: float):
    """Divide the kernel by ``(p_i p_j)**lam``; returns ``(K_lambda, p_lambda)``."""
    if lam < 0:
        raise InvalidArgumentError(f"lambda must be ≥ 0, got {lam}")
    if np.any(p_eps <= 0):
        raise DegenerateGraphError("degree vector must be strictly positive")
    if lam == 0:
        K_lam = K.copy()
    else:
        w = p_eps ** (-lam)
        if sp.issparse(K):
            K_lam = sp.diags(w) @ K @ sp.diags(w)
            K_lam = sp.csr_matrix(K_lam)
        else:
            K_lam = K * np.outer(w, w)
    return K_lam, degree_vector(K_lam)


def averaging_operator(K_lambda, p_lambda: np.ndarray):
    if np.any(p_lambda <= 0):
        raise DegenerateGraphError("p_lambda must be strictly positive")
    N = p_lambda.shape[0]
    inv = 1.0 / (N * p_lambda)
    if sp.issparse(K_lambda):
        return sp.csr_matrix(sp.diags(inv) @ K_lambda)
    return K_lambda * inv[:, None]


def build_graph_operators(cloud: PointCloud, cfg: KernelConfig, keep_kernel: bool = True) -> GraphOperators:
    K = build_kernel_matrix(cloud, cfg)
    p_eps = degree_vector(K)
    K_lam, p_lam = lambda_renormalize(K, p_eps, cfg.lam)
    A = averaging_operator(K_lam, p_lam)
    c0, c2 = kernel_moments(cfg.kind, cfg.intrinsic_dim)
    return GraphOperators(K if keep_kernel else None, p_eps, p_lam, A, c0, c2, cfg)


def extension_kernel(cloud: PointCloud, ops: GraphOperators, x) -> np.ndarray:
    """Rows ``A(x, .)`` of the averaging operator at arbitrary ambient points.

    ``x`` is a single point (shape ``(D,)``, returns ``(N,)``) or a batch
    (shape ``(M, D)``, returns ``(M, N)``).  The degree at ``x`` is computed
    from the same samples, so at a sample point the row coincides with the
    corresponding row of ``A``.
    """
    cfg = ops.config
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    N = cloud.N
    k = _gaussian(cdist(X, cloud.points, "sqeuclidean"), cfg)
    p_x = k.sum(axis=1) / N
    if np.any(p_x <= 0):
        raise DegenerateGraphError("extension point carries no kernel mass (p_eps(x) = 0)")
    k_lam = k / (p_x[:, None] * ops.p_eps[None, :]) ** cfg.lam
    p_lam_x = k_lam.sum(axis=1) / N
    rows = k_lam / (N * p_lam_x[:, None])
    return rows[0] if single else rows


def save_graph_operators(ops: GraphOperators, path, include_kernel: bool = True) -> None:
    """Write ``A``, the degree vectors and the config (plus ``K`` optionally) to ``.npz``."""
    meta = {"version": BUNDLE_VERSION, "config": asdict(ops.config), "c0": ops.c0, "c2": ops.c2}
    arrays = {"p_eps": ops.p_eps, "p_lambda": ops.p_lambda}
    dense = lambda M: M.toarray() if sp.issparse(M) else M  # noqa: E731
    arrays["A"] = dense(ops.A)
    if include_kernel and ops.K is not None:
        arrays["K"] = dense(ops.K)
    np.savez(path, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_graph_operators(path) -> GraphOperators:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            arrays = {name: data[name] for name in data.files if name != "meta"}
    except (OSError, KeyError, ValueError) as exc:
        raise PointCloudIOError(f"cannot load operator bundle {path}: {exc}") from exc
    if meta.get("version") != BUNDLE_VERSION:
        raise PointCloudIOError(f"unsupported operator bundle version {meta.get('version')}")
    cfg = KernelConfig(**meta["config"])
    K, A = arrays.get("K"), arrays["A"]
    if cfg.storage != "dense":
        K = None if K is None else sp.csr_matrix(K)
        A = sp.csr_matrix(A)
    return GraphOperators(K, arrays["p_eps"], arrays["p_lambda"], A, meta["c0"], meta["c2"], cfg)
