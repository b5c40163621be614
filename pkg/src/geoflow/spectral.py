"""Functional calculus of the averaging operator.

``A`` is similar to the symmetric matrix ``A_s = diag(d) A diag(1/d)`` with
``d = sqrt(p_lambda)``, so for any scalar function ``f`` on ``[-1, 1]``::

    f(A) u = diag(1/d) V diag(f(mu)) V^T diag(d) u

where ``A_s = V diag(mu) V^T``.  Everything here is built on that identity:
square roots of ``(1 + shift) I - A``, the half-wave propagator
``exp(i t c20 sqrt(((1 + shift) I - A) / epsilon))``, its cosine/sine parts, a
Chebyshev fast path for analytic ``f`` and off-sample (Nyström) evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import chebyshev

from .errors import (
    EigensolverError,
    FunctionDomainError,
    InvalidArgumentError,
    NumericalConsistencyError,
    PointCloudIOError,
    SpectrumViolationError,
)
from .laplacian import GraphOperators, extension_kernel
from .sampling import PointCloud

__all__ = [
    "SpectralDecomposition",
    "ScalarFunction",
    "identity",
    "power",
    "exponential",
    "sqrt_function",
    "propagator",
    "wave_cos",
    "wave_sin_kernel",
    "symmetrize",
    "eig_sym",
    "decompose",
    "apply_function",
    "sqrt_shifted",
    "wave_propagate",
    "wave_parts",
    "chebyshev_coefficients",
    "chebyshev_apply",
    "chebyshev_adaptive",
    "chebyshev_decay_fit",
    "nystrom_extend",
    "save_decomposition",
    "load_decomposition",
]

DECOMP_VERSION = 1
CLAMP_TOL = 1e-10
DERIVED_ZERO_TOL = 1e-12


# --------------------------------------------------------------------------- #
# scalar functions
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ScalarFunction:
    """A function of the spectral variable ``mu`` in ``[-1, 1]``.

    ``derivative0`` is ``f'(0)``; it is needed for the derived function
    ``(f(mu) - f(0)) / mu`` near ``mu = 0``.  ``analytic`` records whether
    ``f`` extends holomorphically past ``[-1, 1]``, which the Chebyshev path
    requires.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    derivative0: complex | None = None
    analytic: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, mu) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(mu, dtype=float)))

    @property
    def f0(self) -> complex:
        return complex(self(np.zeros(1))[0])

    def derived(self) -> "ScalarFunction":
        """``Df(mu) = (f(mu) - f(0)) / mu`` with the limit ``f'(0)`` at ``mu = 0``."""
        f0 = self.f0
        if self.derivative0 is not None:
            fp0 = complex(self.derivative0)
        else:
            step = 1e-6
            fp0 = complex((self(np.array([step]))[0] - self(np.array([-step]))[0]) / (2 * step))

        def evaluate(mu):
            mu = np.asarray(mu, dtype=float)
            small = np.abs(mu) < DERIVED_ZERO_TOL
            safe = np.where(small, 1.0, mu)
            out = (self(mu) - f0) / safe
            return np.where(small, fp0, out)

        return ScalarFunction(evaluate, "derived", None, self.analytic, {"base": self.kind, **self.params})


def _shifted_gap(mu, shift):
    """``1 + shift - mu`` clamped at zero; spillover beyond ``CLAMP_TOL`` is an error."""
    s = 1.0 + shift - np.asarray(mu, dtype=float)
    worst = np.min(s) if s.size else 0.0
    if worst < -CLAMP_TOL:
        raise SpectrumViolationError(
            f"eigenvalue {1.0 + shift - worst:.15g} exceeds 1 + shift = {1.0 + shift:.15g}"
        )
    return np.maximum(s, 0.0)


def identity() -> ScalarFunction:
    return ScalarFunction(lambda mu: mu.astype(complex), "custom", 1.0, True, {"name": "identity"})


def power(k: int) -> ScalarFunction:
    return ScalarFunction(
        lambda mu: (mu ** k).astype(complex), "custom", 1.0 if k == 1 else 0.0, True, {"name": f"z^{k}"}
    )


def exponential(a: float) -> ScalarFunction:
    return ScalarFunction(lambda mu: np.exp(a * mu).astype(complex), "custom", a, True, {"name": f"exp({a}z)"})


def sqrt_function(shift: float = 0.0) -> ScalarFunction:
    """``sqrt(1 + shift - mu)``."""
    if shift < 0:
        raise InvalidArgumentError("shift must be ≥ 0")
    return ScalarFunction(
        lambda mu: np.sqrt(_shifted_gap(mu, shift)).astype(complex),
        "sqrt_shifted",
        -0.5 / np.sqrt(1.0 + shift),
        shift > 0,
        {"shift": shift},
    )


def _theta_rate(t, epsilon, c20):
    return t * c20 / np.sqrt(epsilon)


def propagator(t: float, epsilon: float, c20: float, shift: float = 0.0) -> ScalarFunction:
    """``exp(i t c20 sqrt((1 + shift - mu) / epsilon))``."""
    if not epsilon > 0:
        raise InvalidArgumentError("epsilon must be > 0")
    if shift < 0:
        raise InvalidArgumentError("shift must be ≥ 0")
    rate = _theta_rate(t, epsilon, c20)
    s0 = np.sqrt(1.0 + shift)
    d0 = np.exp(1j * rate * s0) * 1j * rate * (-0.5 / s0)
    return ScalarFunction(
        lambda mu: np.exp(1j * rate * np.sqrt(_shifted_gap(mu, shift))),
        "propagator",
        d0,
        shift > 0,
        {"t": t, "epsilon": epsilon, "c20": c20, "shift": shift},
    )


def wave_cos(t: float, epsilon: float, c20: float, shift: float = 0.0) -> ScalarFunction:
    """``cos(c20 t sqrt((1 + shift - mu) / epsilon))``; entire in ``mu``."""
    rate = _theta_rate(t, epsilon, c20)
    s0 = np.sqrt(1.0 + shift)
    d0 = -np.sin(rate * s0) * rate * (-0.5 / s0)
    return ScalarFunction(
        lambda mu: np.cos(rate * np.sqrt(_shifted_gap(mu, shift))).astype(complex),
        "wave_cos",
        d0,
        True,
        {"t": t, "epsilon": epsilon, "c20": c20, "shift": shift},
    )


def wave_sin_kernel(t: float, epsilon: float, c20: float, shift: float = 0.0) -> ScalarFunction:
    """``sin(c20 t sqrt((1 + shift - mu) / epsilon)) / sqrt(1 + shift - mu)``; entire in ``mu``.

    Written through ``numpy.sinc`` so the value at ``mu = 1 + shift`` is the
    finite limit ``c20 t / sqrt(epsilon)``.
    """
    rate = _theta_rate(t, epsilon, c20)
    s0 = np.sqrt(1.0 + shift)
    d0 = np.cos(rate * s0) * rate * (-0.5 / s0) / s0 + np.sin(rate * s0) * 0.5 * s0 ** -3

    def evaluate(mu):
        root = np.sqrt(_shifted_gap(mu, shift))
        return (rate * np.sinc(rate * root / np.pi)).astype(complex)

    return ScalarFunction(evaluate, "wave_sin_kernel", d0, True,
                          {"t": t, "epsilon": epsilon, "c20": c20, "shift": shift})


# --------------------------------------------------------------------------- #
# decomposition
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of the symmetrized averaging matrix, sorted by descending eigenvalue."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    weight: np.ndarray
    residual: float

    @property
    def N(self) -> int:
        return self.eigenvalues.shape[0]

    def symmetric_matrix(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def symmetrize(A, p_lambda: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate ``A`` by ``diag(sqrt(p_lambda))``; returns ``(A_s, d)``."""
    p_lambda = np.asarray(p_lambda, dtype=float)
    if np.any(p_lambda <= 0):
        raise InvalidArgumentError("p_lambda must be strictly positive")
    d = np.sqrt(p_lambda)
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    A_s = d[:, None] * A / d[None, :]
    asym = np.abs(A_s - A_s.T).max()
    if asym >= tol:
        raise NumericalConsistencyError(f"symmetrized operator is asymmetric by {asym:.3e}")
    return 0.5 * (A_s + A_s.T), d


def eig_sym(A_s: np.ndarray, weight: np.ndarray | None = None) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix (LAPACK ``syevd`` via numpy)."""
    A_s = np.asarray(A_s, dtype=float)
    try:
        mu, V = np.linalg.eigh(A_s)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"symmetric eigensolver failed: {exc}") from exc
    mu = mu[::-1].copy()
    V = V[:, ::-1].copy()
    residual = float(np.abs(A_s @ V - V * mu).max()) if mu.size else 0.0
    norm = float(np.abs(mu).max()) if mu.size else 0.0
    if not np.isfinite(residual) or residual >= 1e-8 * max(norm, 1.0):
        raise EigensolverError(f"eigen-residual {residual:.3e} too large (|A_s| = {norm:.3e})")
    if weight is None:
        weight = np.ones(mu.shape[0])
    mu.setflags(write=False)
    V.setflags(write=False)
    weight = np.array(weight, dtype=float)
    weight.setflags(write=False)
    return SpectralDecomposition(mu, V, weight, residual)


def decompose(ops: GraphOperators) -> SpectralDecomposition:
    A_s, d = symmetrize(ops.A, ops.p_lambda)
    return eig_sym(A_s, d)


def _values(decomp: SpectralDecomposition, f: ScalarFunction) -> np.ndarray:
    vals = f(decomp.eigenvalues)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise FunctionDomainError(f"f is not finite at eigenvalue mu = {decomp.eigenvalues[bad[0]]!r}")
    return vals


def _apply_values(decomp: SpectralDecomposition, vals: np.ndarray, u) -> np.ndarray:
    u = np.asarray(u)
    if u.shape[0] != decomp.N:
        raise InvalidArgumentError(f"vector length {u.shape[0]} does not match N={decomp.N}")
    d = decomp.weight if u.ndim == 1 else decomp.weight[:, None]
    V = decomp.eigenvectors
    coeffs = V.T @ (d * u)
    coeffs = vals * coeffs if u.ndim == 1 else vals[:, None] * coeffs
    return (V @ coeffs) / d


def apply_function(decomp: SpectralDecomposition, f: ScalarFunction, u) -> np.ndarray:
    """``f(A) u`` through the symmetric eigendecomposition."""
    return _apply_values(decomp, _values(decomp, f), u)


def sqrt_shifted(decomp: SpectralDecomposition, epsilon_shift: float, u) -> np.ndarray:
    """``sqrt((1 + epsilon_shift) I - A) u``."""
    return apply_function(decomp, sqrt_function(epsilon_shift), u)


def wave_propagate(decomp: SpectralDecomposition, t: float, epsilon: float, epsilon_shift: float,
                   c20: float, u) -> np.ndarray:
    """Half-wave propagator ``exp(i t sqrt(Delta + c20**2 shift / epsilon)) u``."""
    if t == 0:
        return np.array(u, dtype=complex)
    return apply_function(decomp, propagator(t, epsilon, c20, epsilon_shift), u)


def wave_parts(decomp: SpectralDecomposition, t: float, epsilon: float, epsilon_shift: float,
               c20: float, u) -> np.ndarray:
    """The propagator assembled as ``C u + i B (S u)`` from cosine and sine-kernel parts."""
    cos_part = apply_function(decomp, wave_cos(t, epsilon, c20, epsilon_shift), u)
    sin_part = apply_function(decomp, wave_sin_kernel(t, epsilon, c20, epsilon_shift), u)
    return cos_part + 1j * sqrt_shifted(decomp, epsilon_shift, sin_part)


# --------------------------------------------------------------------------- #
# Chebyshev fast path
# --------------------------------------------------------------------------- #


def _check_chebyshev_ready(f: ScalarFunction) -> None:
    if f.kind in ("propagator", "sqrt_shifted") and f.params.get("shift", 0.0) == 0:
        raise InvalidArgumentError(
            f"{f.kind} with zero shift has a square-root branch point on the spectrum; "
            "use the eigendecomposition path or a positive shift"
        )
    if not f.analytic:
        raise InvalidArgumentError("Chebyshev expansion requires a function analytic on [-1, 1]")


def chebyshev_coefficients(f: ScalarFunction, degree: int) -> np.ndarray:
    """Interpolation coefficients at the ``degree + 1`` Chebyshev points of the first kind."""
    if degree < 1:
        raise InvalidArgumentError("degree must be ≥ 1")
    _check_chebyshev_ready(f)
    return chebyshev.chebinterpolate(lambda x: f(x), degree)


def _tail_ratio(coeffs: np.ndarray) -> float:
    mags = np.abs(coeffs)
    top = mags.max()
    if top == 0:
        return 0.0
    return float(mags[-2:].max() / top)


def chebyshev_decay_fit(coeffs, window: tuple[float, float] = (1e-12, 1e-2)) -> tuple[float, float]:
    """Least-squares fit of ``log|c_k|`` against ``k`` inside a relative magnitude window.

    Coefficients larger than ``window[1] * max|c|`` (pre-asymptotic head) or
    smaller than ``window[0] * max|c|`` (rounding floor) are left out.  Returns
    ``(rate, r_squared)`` where ``|c_k| ~ exp(-rate * k)``.
    """
    mags = np.abs(np.asarray(coeffs))
    rel = mags / mags.max()
    k = np.arange(mags.size)
    keep = (rel > window[0]) & (rel < window[1])
    if keep.sum() < 3:
        raise InvalidArgumentError("too few coefficients inside the fit window")
    x, y = k[keep], np.log(mags[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return float(-slope), r2


def _chebyshev_sum(A, d, coeffs, u):
    """``sum_k c_k T_k(A) u`` by the three-term recurrence on ``diag(d) A diag(1/d)``."""
    d = np.asarray(d, dtype=float)

    def matvec(y):
        return d * (A @ (y / d))

    y = d * np.asarray(u, dtype=complex)
    t_prev = y
    acc = coeffs[0] * t_prev
    if len(coeffs) > 1:
        t_curr = matvec(y)
        acc = acc + coeffs[1] * t_curr
        for c in coeffs[2:]:
            t_prev, t_curr = t_curr, 2.0 * matvec(t_curr) - t_prev
            acc = acc + c * t_curr
    return acc / d


def chebyshev_apply(A, d, f: ScalarFunction, u, degree: int) -> tuple[np.ndarray, float]:
    """Degree-``degree`` Chebyshev approximation of ``f(A) u``.

    Returns the vector and the tail ratio ``max(|c_{K-1}|, |c_K|) / max_k |c_k|``.
    """
    coeffs = chebyshev_coefficients(f, degree)
    return _chebyshev_sum(A, d, coeffs, u), _tail_ratio(coeffs)


def chebyshev_adaptive(A, d, f: ScalarFunction, u, tol: float = 1e-10, start_degree: int = 16,
                       max_degree: int = 8192) -> tuple[np.ndarray, float, int]:
    """Double the degree until the tail ratio drops below ``tol``; returns ``(vector, ratio, degree)``."""
    degree = start_degree
    while True:
        coeffs = chebyshev_coefficients(f, degree)
        ratio = _tail_ratio(coeffs)
        if ratio < tol or degree >= max_degree:
            break
        degree *= 2
    return _chebyshev_sum(A, d, coeffs, u), ratio, degree


# --------------------------------------------------------------------------- #
# Nyström extension
# --------------------------------------------------------------------------- #


def nystrom_extend(cloud: PointCloud, ops: GraphOperators, decomp: SpectralDecomposition,
                   f: ScalarFunction, u_on_samples, u_at_x, x):
    """Evaluate ``f(A) u`` at off-sample points via ``f(0) u(x) + A(x, .) Df(A) u``.

    ``x`` is one ambient point or an ``(M, D)`` batch; ``u_at_x`` supplies the
    value(s) of ``u`` there.
    """
    w = apply_function(decomp, f.derived(), u_on_samples)
    rows = extension_kernel(cloud, ops, x)
    out = f.f0 * np.asarray(u_at_x) + rows @ w
    return complex(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- #
# persistence
# --------------------------------------------------------------------------- #


def save_decomposition(decomp: SpectralDecomposition, path) -> None:
    meta = {"version": DECOMP_VERSION, "residual": decomp.residual, "N": decomp.N}
    np.savez(path, meta=np.array(json.dumps(meta, sort_keys=True)), eigenvalues=decomp.eigenvalues,
             eigenvectors=decomp.eigenvectors, weight=decomp.weight)


def load_decomposition(path) -> SpectralDecomposition:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            mu, V, d = data["eigenvalues"], data["eigenvectors"], data["weight"]
    except (OSError, KeyError, ValueError) as exc:
        raise PointCloudIOError(f"cannot load decomposition {path}: {exc}") from exc
    if meta.get("version") != DECOMP_VERSION:
        raise PointCloudIOError(f"unsupported decomposition version {meta.get('version')}")
    return SpectralDecomposition(mu, V, d, float(meta["residual"]))
