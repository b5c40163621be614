"""Dominant Bernstein-type exponential factors of the consistency bounds.

These are closed-form evaluators only.  The constant ``C`` is not pinned by the
theory; it defaults to 1 and every bound is asymptotic, so at desk-scale
parameters the values are typically indistinguishable from 1.
"""

from __future__ import annotations

import math

from .errors import InvalidArgumentError

KINDS = ("halfwave", "mean", "max")


def bernstein_exponent(kind: str, N: float, n: int, epsilon: float, delta: float = 1.0, t: float = 1.0,
                       K_u: float = 1.0, h: float = 1.0, C: float = 1.0) -> float:
    """The (positive) exponent ``E`` such that the bound is ``exp(-E)``.

    * ``halfwave``: ``N delta^4 eps^(5n/2 + 4) / (C K_u^2 |t|^8)``
    * ``mean``:     ``N h^(2(n + 2)) eps^(5n/2 + 4) / C``
    * ``max``:      ``N h^(2n) eps^(5n/2 + 4) / C``
    """
    for name, value in (("N", N), ("n", n), ("epsilon", epsilon), ("delta", delta), ("t", abs(t)),
                        ("K_u", K_u), ("h", h), ("C", C)):
        if not value > 0:
            raise InvalidArgumentError(f"{name} must be positive, got {value}")
    eps_power = epsilon ** (2.5 * n + 4)
    if kind == "halfwave":
        return N * delta ** 4 * eps_power / (C * K_u ** 2 * abs(t) ** 8)
    if kind == "mean":
        return N * h ** (2 * (n + 2)) * eps_power / C
    if kind == "max":
        return N * h ** (2 * n) * eps_power / C
    raise InvalidArgumentError(f"unknown bound kind {kind!r}; expected one of {KINDS}")


def bernstein_bound(kind: str, N: float, n: int, epsilon: float, delta: float = 1.0, t: float = 1.0,
                    K_u: float = 1.0, h: float = 1.0, C: float = 1.0) -> float:
    """Evaluate ``min(1, exp(-E))`` for the requested kind; see :func:`bernstein_exponent`."""
    return min(1.0, math.exp(-bernstein_exponent(kind, N, n, epsilon, delta, t, K_u, h, C)))
