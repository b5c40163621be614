"""Discrete coherent states built from extrinsic coordinates.

For a base sample ``X0``, unit momentum ``xi`` and semiclassical parameter ``h``
the (un-normalized) state is::

    psi(X_j) = exp((i/h) <xi, X0 - X_j> - |X_j - X0|**2 / (2h))

The continuum normalization constant is never formed; observables use the
time-dependent discrete normalization instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateStateError, InvalidArgumentError
from .sampling import Model, PointCloud, format_header, tangent_project

__all__ = [
    "CoherentState",
    "coherent_amplitudes",
    "make_state_neighbor",
    "make_state_tangent",
    "pick_neighbor",
    "discrete_norm",
    "time_normalized_state",
    "save_state",
]


@dataclass(frozen=True)
class CoherentState:
    amplitudes: np.ndarray
    base_index: int
    momentum: np.ndarray
    h: float
    construction: str
    accuracy_warning: bool = False

    def metadata(self) -> dict:
        return {
            "j0": self.base_index,
            "xi": " ".join(repr(float(v)) for v in self.momentum),
            "h": repr(self.h),
            "construction": self.construction,
        }


def coherent_amplitudes(points: np.ndarray, x0: np.ndarray, xi: np.ndarray, h: float) -> np.ndarray:
    diff = points - x0
    phase = -(diff @ xi) / h
    envelope = -np.sum(diff * diff, axis=1) / (2.0 * h)
    return np.exp(envelope + 1j * phase)


def _check_h(h):
    if not h > 0:
        raise InvalidArgumentError(f"h must be > 0, got {h}")


def make_state_neighbor(cloud: PointCloud, j0: int, jstar: int, h: float) -> CoherentState:
    """State whose momentum is the unit chord from sample ``j0`` towards sample ``jstar``.

    ``accuracy_warning`` is set when the chord is longer than ``h**(n/4 + 2)``
    (coefficient 1; a heuristic threshold).
    """
    _check_h(h)
    if jstar == j0:
        raise InvalidArgumentError("neighbor index must differ from the base index")
    X = cloud.points
    chord = X[jstar] - X[j0]
    length = float(np.linalg.norm(chord))
    if length == 0:
        raise InvalidArgumentError(f"samples {j0} and {jstar} coincide")
    xi = chord / length
    warn = length > h ** (cloud.intrinsic_dim / 4 + 2)
    return CoherentState(coherent_amplitudes(X, X[j0], xi, h), int(j0), xi, float(h), "neighbor", bool(warn))


def make_state_tangent(cloud: PointCloud, j0: int, xi_ambient, h: float, tol: float = 1e-8) -> CoherentState:
    """State with a prescribed unit tangent momentum at sample ``j0`` (model clouds only)."""
    _check_h(h)
    x0 = cloud.points[j0]
    xi = np.asarray(xi_ambient, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-10:
        raise InvalidArgumentError("momentum must have unit length")
    normal = xi - tangent_project(cloud.model, x0, xi)
    off = float(np.linalg.norm(normal))
    if off > tol:
        raise InvalidArgumentError(f"momentum is not tangent at sample {j0}: normal component {off:.6g}")
    return CoherentState(coherent_amplitudes(cloud.points, x0, xi, h), int(j0), xi, float(h), "analytic-tangent")


def pick_neighbor(cloud: PointCloud, j0: int, direction, max_angle: float = math.pi / 4) -> int:
    """Nearest sample whose chord from ``j0`` lies within ``max_angle`` of ``direction``.

    Ties go to the smaller distance, then the smaller index.
    """
    X = cloud.points
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    chords = X - X[j0]
    dist = np.linalg.norm(chords, axis=1)
    valid = dist > 0
    cosines = np.full(cloud.N, -np.inf)
    cosines[valid] = (chords[valid] @ direction) / dist[valid]
    candidates = np.flatnonzero(valid & (cosines >= math.cos(max_angle)))
    if candidates.size == 0:
        raise InvalidArgumentError(f"no sample within {max_angle:.4g} rad of the requested direction")
    order = np.lexsort((candidates, dist[candidates]))
    return int(candidates[order[0]])


def discrete_norm(u) -> float:
    """``sqrt(<u, u>_N)`` with ``<u, v>_N = (1/N) sum_j u_j conj(v_j)``."""
    u = np.asarray(u)
    return float(np.sqrt(np.mean(np.abs(u) ** 2)))


def time_normalized_state(state: CoherentState, propagated) -> tuple[np.ndarray, float]:
    """Divide the initial amplitudes by the discrete norm of their propagation."""
    c = discrete_norm(propagated)
    if c == 0:
        raise DegenerateStateError("propagated state has zero discrete norm")
    return state.amplitudes / c, c


def save_state(state: CoherentState, path) -> None:
    lines = [format_header(state.metadata()), "index,re,im"]
    lines.extend(f"{j},{float(z.real)!r},{float(z.imag)!r}" for j, z in enumerate(state.amplitudes))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def default_momentum(cloud: PointCloud, j0: int) -> np.ndarray:
    """A deterministic unit tangent direction at sample ``j0`` for the model manifolds."""
    x0 = cloud.points[j0]
    if cloud.model is Model.SPHERE2:
        ref = np.array([0.0, 0.0, 1.0]) if abs(x0[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        v = np.cross(x0, ref)
    elif cloud.model is Model.FLAT_TORUS2:
        v = tangent_project(cloud.model, x0, np.array([-x0[1], x0[0], -x0[3], x0[2]]))
    elif cloud.model is Model.CIRCLE1:
        v = np.array([-x0[1], x0[0]])
    else:
        raise InvalidArgumentError("External clouds need a neighbor-based momentum")
    return v / np.linalg.norm(v)
