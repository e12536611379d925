"""One-dimensional orthonormal basis families.

Each family is normalized so that the squares of its basis functions
integrate to one over the family's support.  Indexing is 1-based: phi_1 is
the lowest-order (constant or weighted-constant) function.  The real-line
family consists of weighted probabilist's Hermite polynomials,

    phi_{k+1}(z) = (sqrt(2*pi) * k!)^(-1/2) * exp(-z^2/4) * H_k(z),

evaluated through the normalized three-term recurrence so that no factorial
or raw polynomial value is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import OrderLimitError, SupportError

HERMITE = "hermite"
LEGENDRE = "legendre"
FOURIER = "fourier"
LAGUERRE = "laguerre"

DEFAULT_MAX_ORDER = 64

_SUPPORTS = {
    HERMITE: (-math.inf, math.inf),
    LEGENDRE: (-1.0, 1.0),
    FOURIER: (0.0, 2.0 * math.pi),
    LAGUERRE: (0.0, math.inf),
}


@dataclass(frozen=True)
class BasisFamily:
    """A 1-D orthonormal family identified by kind, with a configurable order cap."""

    kind: str
    max_order: int = DEFAULT_MAX_ORDER

    def __post_init__(self):
        if self.kind not in _SUPPORTS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.max_order < 1:
            raise ValueError("max_order must be at least 1")

    @property
    def support(self) -> tuple[float, float]:
        return _SUPPORTS[self.kind]

    def check_order(self, k: int) -> None:
        if k < 1:
            raise ValueError(f"basis index must be >= 1, got {k}")
        if k > self.max_order:
            raise OrderLimitError(
                f"basis index {k} exceeds max_order={self.max_order} for {self.kind}"
            )

    def check_support(self, z: np.ndarray) -> None:
        lo, hi = self.support
        z = np.asarray(z)
        if not np.all(np.isfinite(z)) or np.any(z < lo) or np.any(z > hi):
            raise SupportError(f"point outside {self.kind} support [{lo}, {hi}]")


def hermite(max_order: int = DEFAULT_MAX_ORDER) -> BasisFamily:
    """Weighted Hermite family on the real line."""
    return BasisFamily(HERMITE, max_order)


def legendre(max_order: int = DEFAULT_MAX_ORDER) -> BasisFamily:
    """Normalized Legendre family on [-1, 1]."""
    return BasisFamily(LEGENDRE, max_order)


def fourier(max_order: int = DEFAULT_MAX_ORDER) -> BasisFamily:
    """Fourier family {1, cos, sin, cos 2., sin 2., ...} on the circle [0, 2*pi)."""
    return BasisFamily(FOURIER, max_order)


def laguerre(max_order: int = DEFAULT_MAX_ORDER) -> BasisFamily:
    """Weighted Laguerre family exp(-z/2) * L_k(z) on the half line."""
    return BasisFamily(LAGUERRE, max_order)


def _hermite_tables(order, z):
    # Normalized values carried through z*phi_k = sqrt(k)*phi_{k+1} + sqrt(k-1)*phi_{k-1};
    # one extra order is produced because phi'_k needs phi_{k+1}.
    n = z.shape[0]
    vals = np.empty((order + 1, n))
    vals[0] = (2.0 * math.pi) ** (-0.25) * np.exp(-0.25 * z * z)
    vals[1] = z * vals[0]
    for k in range(2, order + 1):
        vals[k] = (z * vals[k - 1] - math.sqrt(k - 1) * vals[k - 2]) / math.sqrt(k)
    grads = np.empty((order, n))
    # phi'_k = (sqrt(k-1)*phi_{k-1} - sqrt(k)*phi_{k+1}) / 2
    grads[0] = -0.5 * vals[1]
    for k in range(2, order + 1):
        grads[k - 1] = 0.5 * (math.sqrt(k - 1) * vals[k - 2] - math.sqrt(k) * vals[k])
    return vals[:order], grads


def _legendre_tables(order, z):
    n = z.shape[0]
    p = np.empty((order, n))
    dp = np.empty((order, n))
    p[0] = 1.0
    dp[0] = 0.0
    if order >= 2:
        p[1] = z
        dp[1] = 1.0
    for k in range(2, order):
        p[k] = ((2 * k - 1) * z * p[k - 1] - (k - 1) * p[k - 2]) / k
        dp[k] = dp[k - 2] + (2 * k - 1) * p[k - 1]
    scale = np.sqrt((2.0 * np.arange(1, order + 1) - 1.0) / 2.0)
    return p * scale[:, None], dp * scale[:, None]


def _fourier_tables(order, z):
    n = z.shape[0]
    vals = np.empty((order, n))
    grads = np.empty((order, n))
    vals[0] = (2.0 * math.pi) ** (-0.5)
    grads[0] = 0.0
    inv_sqrt_pi = math.pi ** (-0.5)
    for k in range(2, order + 1):
        m = k // 2
        if k % 2 == 0:
            vals[k - 1] = np.cos(m * z) * inv_sqrt_pi
            grads[k - 1] = -m * np.sin(m * z) * inv_sqrt_pi
        else:
            vals[k - 1] = np.sin(m * z) * inv_sqrt_pi
            grads[k - 1] = m * np.cos(m * z) * inv_sqrt_pi
    return vals, grads


def _laguerre_tables(order, z):
    # Standard Laguerre polynomials are orthonormal against exp(-z), so the
    # weighted functions exp(-z/2)*L_k(z) need no extra scale.
    n = z.shape[0]
    lag = np.empty((order, n))
    dlag = np.empty((order, n))
    lag[0] = 1.0
    dlag[0] = 0.0
    if order >= 2:
        lag[1] = 1.0 - z
        dlag[1] = -1.0
    for k in range(2, order):
        lag[k] = ((2 * k - 1 - z) * lag[k - 1] - (k - 1) * lag[k - 2]) / k
        dlag[k] = dlag[k - 1] - lag[k - 1]
    w = np.exp(-0.5 * z)
    return lag * w, (dlag - 0.5 * lag) * w


_TABLE_BUILDERS = {
    HERMITE: _hermite_tables,
    LEGENDRE: _legendre_tables,
    FOURIER: _fourier_tables,
    LAGUERRE: _laguerre_tables,
}


def basis_tables(family: BasisFamily, order: int, z) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of phi_1..phi_order at points z.

    Parameters
    ----------
    family : BasisFamily
    order : int
        Highest basis index to evaluate (inclusive, 1-based).
    z : array_like, shape (n,)

    Returns
    -------
    vals, grads : ndarray, shape (order, n)
        vals[k-1, i] = phi_k(z_i) and grads[k-1, i] = phi'_k(z_i).
    """
    family.check_order(order)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    family.check_support(z)
    return _TABLE_BUILDERS[family.kind](order, z)


def eval_basis(family: BasisFamily, k: int, z: float) -> float:
    """phi_k(z) for the normalized family."""
    vals, _ = basis_tables(family, k, [z])
    return float(vals[k - 1, 0])


def eval_basis_grad(family: BasisFamily, k: int, z: float) -> float:
    """d(phi_k)/dz at z (for the Fourier family, the derivative in the angle)."""
    _, grads = basis_tables(family, k, [z])
    return float(grads[k - 1, 0])


def recurrence_z_phi(family: BasisFamily, k: int) -> tuple[tuple[int, float], tuple[int, float]]:
    """Expansion of z*phi_k in the basis: sqrt(k) on phi_{k+1}, sqrt(k-1) on phi_{k-1}.

    Only the Hermite family admits this two-term expansion.  Returns
    ((k+1, sqrt(k)), (k-1, sqrt(k-1))); the second coefficient is zero at k=1.
    """
    if family.kind != HERMITE:
        raise NotImplementedError(f"z*phi recurrence not available for {family.kind}")
    family.check_order(k)
    return (k + 1, math.sqrt(k)), (k - 1, math.sqrt(k - 1))
