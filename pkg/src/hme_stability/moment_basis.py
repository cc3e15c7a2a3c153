"""Multi-indices, graded reverse lexicographic ordering and Hermite functions.

Moment vectors and matrices throughout the package are indexed by
multi-indices ``alpha`` with ``|alpha| <= M``.  The position of a
multi-index inside a vector is fixed by the graded reverse lexicographic
order implemented here.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .exceptions import ParameterError

MultiIndex = tuple[int, ...]

MAX_DIM = 3
MAX_QUADRATURE_NODES = 64


def degree(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def multi_factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def unit(dim: int, i: int, scale: int = 1) -> MultiIndex:
    """``scale * e_i`` with a zero-based axis ``i``."""
    e = [0] * dim
    e[i] = scale
    return tuple(e)


def add(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    """Componentwise difference; the result may have negative entries."""
    return tuple(a - b for a, b in zip(alpha, beta))


def grevlex_precedes(alpha: Sequence[int], beta: Sequence[int]) -> bool:
    """Literal strict comparison ``alpha < beta``.

    Lower total degree comes first.  Within one degree, ``alpha`` precedes
    ``beta`` when, at the last position ``i`` where they differ,
    ``alpha_i > beta_i``.
    """
    if len(alpha) != len(beta):
        raise ParameterError("multi-indices of different dimension")
    da, db = degree(alpha), degree(beta)
    if da != db:
        return da < db
    for i in range(len(alpha) - 1, -1, -1):
        if alpha[i] != beta[i]:
            return alpha[i] > beta[i]
    return False


def grevlex_key(alpha: Sequence[int]) -> tuple:
    """Sort key equivalent to :func:`grevlex_precedes`."""
    return (degree(alpha),) + tuple(-a for a in reversed(alpha))


def _check_dim_order(dim: int, order: int, min_order: int = 2) -> None:
    if not isinstance(dim, (int, np.integer)) or not 1 <= dim <= MAX_DIM:
        raise ParameterError(f"dimension must be 1, 2 or 3, got {dim!r}")
    if not isinstance(order, (int, np.integer)) or order < min_order:
        raise ParameterError(f"moment order must be >= {min_order}, got {order!r}")


def enumerate_indices(dim: int, order: int) -> list[MultiIndex]:
    """All multi-indices of length ``dim`` and degree ``<= order``, grevlex sorted."""
    _check_dim_order(dim, order)
    raw = [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) <= order]
    return sorted(raw, key=grevlex_key)


class MultiIndexSet:
    """An ordered collection of multi-indices with a position lookup.

    Lookups of indices outside the set (negative components, too high
    degree, or simply absent) return ``None``; assembly code treats such
    entries as zero.
    """

    def __init__(self, dim: int, indices: Iterable[Sequence[int]]):
        self.dim = int(dim)
        self.indices: tuple[MultiIndex, ...] = tuple(tuple(int(a) for a in alpha) for alpha in indices)
        if any(len(alpha) != self.dim for alpha in self.indices):
            raise ParameterError("multi-index length does not match dimension")
        self._position = {alpha: i for i, alpha in enumerate(self.indices)}
        if len(self._position) != len(self.indices):
            raise ParameterError("duplicate multi-index")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._position

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, size={len(self)})"

    @property
    def size(self) -> int:
        return len(self.indices)

    def position(self, alpha: Sequence[int]) -> int | None:
        return self._position.get(tuple(alpha))

    def degrees(self) -> np.ndarray:
        return np.array([degree(a) for a in self.indices], dtype=int)

    def factorials(self) -> np.ndarray:
        return np.array([multi_factorial(a) for a in self.indices], dtype=float)

    def label(self, i: int) -> str:
        return ",".join(str(a) for a in self.indices[i])

    # positions that the collision operator conserves
    def conserved_positions(self) -> tuple[int, list[int], list[int]]:
        """Positions of ``0``, the ``e_i`` and the ``2 e_i`` slots."""
        zero = self.position((0,) * self.dim)
        first = [self.position(unit(self.dim, i)) for i in range(self.dim)]
        second = [self.position(unit(self.dim, i, 2)) for i in range(self.dim)]
        if zero is None or None in first or None in second:
            raise ParameterError("index set does not contain all moments of degree <= 2")
        return zero, first, second


class MomentBasis(MultiIndexSet):
    """All multi-indices ``|alpha| <= order`` in ``dim`` velocity dimensions."""

    def __init__(self, dim: int, order: int):
        _check_dim_order(dim, order)
        self.order = int(order)
        super().__init__(dim, enumerate_indices(dim, order))

    def __repr__(self) -> str:
        return f"MomentBasis(dim={self.dim}, order={self.order}, N={len(self)})"


@functools.lru_cache(maxsize=None)
def moment_basis(dim: int, order: int) -> MomentBasis:
    """Cached :class:`MomentBasis` constructor."""
    return MomentBasis(dim, order)


def hermite_1d(max_degree: int, x: np.ndarray, theta: float) -> np.ndarray:
    """Values of the one-dimensional factors ``He_n`` for ``n = 0..max_degree``.

    ``x`` is the shifted velocity ``xi - u``.  The factors are
    ``omega^{-1} d^n omega / d xi^n`` for the Gaussian weight of variance
    ``theta`` and satisfy
    ``h_{n+1} = -(x / theta) h_n - (n / theta) h_{n-1}``.
    The result has shape ``(max_degree + 1,) + x.shape``.
    """
    if theta <= 0:
        raise ParameterError("temperature theta must be positive")
    x = np.asarray(x, dtype=float)
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = -x / theta
    for n in range(1, max_degree):
        out[n + 1] = -(x / theta) * out[n] - (n / theta) * out[n - 1]
    return out


@dataclass(frozen=True)
class HermiteWeight:
    """Gaussian weight ``omega^{[u, theta]}`` and the Hermite functions built on it."""

    u: tuple[float, ...]
    theta: float
    dim: int = field(init=False)

    def __post_init__(self):
        u = tuple(float(c) for c in np.atleast_1d(self.u))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "dim", len(u))
        if not self.theta > 0:
            raise ParameterError("temperature theta must be positive")

    def _shifted(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dim:
            raise ParameterError(f"velocity has {xi.shape[-1]} components, weight has {self.dim}")
        return xi - np.array(self.u)

    def omega(self, xi) -> np.ndarray:
        c = self._shifted(xi)
        r2 = np.sum(c * c, axis=-1)
        return np.exp(-r2 / (2 * self.theta)) / (2 * np.pi * self.theta) ** (self.dim / 2)

    def He(self, alpha: Sequence[int], xi) -> np.ndarray:
        if len(alpha) != self.dim:
            raise ParameterError("multi-index and weight dimension disagree")
        c = self._shifted(xi)
        value = np.ones(c.shape[:-1])
        for d, a in enumerate(alpha):
            value = value * hermite_1d(a, c[..., d], self.theta)[a]
        return value

    def H(self, alpha: Sequence[int], xi) -> np.ndarray:
        return self.He(alpha, xi) * self.omega(xi)


def hermite_eval(alpha: Sequence[int], xi, weight: HermiteWeight) -> np.ndarray:
    """``He_alpha^{[u, theta]}(xi)``; see :meth:`HermiteWeight.H` for the weighted version."""
    return weight.He(alpha, xi)


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the standard normal density ``exp(-x^2/2)/sqrt(2 pi)``.

    Nodes are the eigenvalues of the Jacobi matrix of the probabilists'
    Hermite recurrence, weights are the squared first components of the
    normalized eigenvectors.  Exact for polynomials of degree ``2n - 1``.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUADRATURE_NODES:
        raise ParameterError(f"node count must be in [1, {MAX_QUADRATURE_NODES}], got {n!r}")
    if n == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, n, dtype=float))
    nodes, vecs = eigh_tridiagonal(np.zeros(n), off)
    weights = vecs[0] ** 2
    # symmetric rule: clean up round-off so that odd moments vanish exactly
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return nodes, weights / weights.sum()
