"""Plane-wave dispersion relations and the linear-stability verdicts.

Plane waves ``U_* exp(i (Omega t - k.x))`` solve
``dU/dt + sum_d Abar_d dU/dx_d = Qbar U`` iff
``det(Omega I - sum_d k_d Abar_d + i Qbar) = 0``.  For real ``k`` the
frequencies are therefore the eigenvalues of ``sum_d k_d Abar_d - i Qbar``;
stability in time asks ``Im Omega >= 0``.  For real ``Omega > 0`` in one
dimension the wave numbers solve the pencil ``(Omega I + i Qbar) v = k Abar_1 v``
and stability in space asks ``Re k * Im k <= 0``.

Throughout, ``Qbar`` in these relations is the relaxation matrix
``Dbar^{-1} Qbar`` (see :func:`source_matrix`).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .exceptions import DegeneratePencilError, NumericalError, ParameterError, UnsupportedError
from .hme_assembly import LinearizedSystem

TIME_TOL = 1e-9
SPACE_TOL = 1e-9
INFINITE_ROOT_RTOL = 1e-12
DET_RTOL = 1e-8


def sort_roots(z: np.ndarray) -> np.ndarray:
    """Stable ordering by real part, then imaginary part."""
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def matched_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance between two multisets of complex numbers under the best pairing."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ParameterError("multisets of different size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if len(a) else 0.0


@dataclass(frozen=True, eq=False)
class TimeDispersionPoint:
    k: np.ndarray
    omegas: np.ndarray
    min_im: float
    tol: float = TIME_TOL

    @property
    def stable(self) -> bool:
        return self.min_im >= -self.tol


@dataclass(frozen=True, eq=False)
class SpaceDispersionPoint:
    omega: float
    ks: np.ndarray
    n_infinite: int
    worst_product: float
    det_residual: float
    tol: float = SPACE_TOL

    @property
    def products(self) -> np.ndarray:
        return self.ks.real * self.ks.imag

    @property
    def stable(self) -> bool:
        return self.worst_product <= self.tol


def _qbar(lin: LinearizedSystem, Qbar) -> np.ndarray:
    Q = lin.Qbar if Qbar is None else Qbar
    if Q is None:
        return np.zeros((lin.size, lin.size))
    return np.asarray(Q, dtype=float)


def source_matrix(lin: LinearizedSystem, Qbar=None) -> np.ndarray:
    """Relaxation matrix of ``dw/dt + sum_d Abar_d dw/dx_d = Dbar^{-1} Qbar w``.

    For HME ``Dbar^{-1} Qbar = Qbar``; for projected systems the product
    is kept as is.
    """
    Q = _qbar(lin, Qbar)
    if not np.any(Q):
        return Q
    return np.linalg.solve(lin.Dbar, Q)


def dispersion_matrix(lin: LinearizedSystem, Qbar, k) -> np.ndarray:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (lin.dim,):
        raise ParameterError(f"wave vector must have {lin.dim} components, got shape {k.shape}")
    A = sum(kd * Ad for kd, Ad in zip(k, lin.Abar))
    return A - 1j * source_matrix(lin, Qbar)


def time_dispersion(lin: LinearizedSystem, Qbar=None, k=None, tol: float = TIME_TOL) -> TimeDispersionPoint:
    """Complex frequencies ``Omega(k)`` for a real wave vector."""
    k = np.zeros(lin.dim) if k is None else np.atleast_1d(np.asarray(k, dtype=float))
    X = dispersion_matrix(lin, Qbar, k)
    try:
        omegas = np.linalg.eigvals(X)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed at k={k}: {exc}", matrix=X) from exc
    omegas = sort_roots(omegas)
    return TimeDispersionPoint(k=k, omegas=omegas, min_im=float(omegas.imag.min()), tol=tol)


def symmetrized_dispersion_matrix(lin: LinearizedSystem, Qbar, k) -> np.ndarray:
    """``sum_d k_d T^{-1} Mbar_d T - i T^{-1} Qbar T``: symmetric real part, NSD imaginary part."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    t = np.diag(lin.T)
    scale = t[None, :] / t[:, None]
    A = sum(kd * Md * scale for kd, Md in zip(k, lin.Mbar))
    return A - 1j * _qbar(lin, Qbar) * scale


def similarity_mismatch(lin: LinearizedSystem, Qbar, k) -> float:
    """Eigenvalue distance between the dispersion matrix and its symmetrized form."""
    a = np.linalg.eigvals(dispersion_matrix(lin, Qbar, k))
    b = np.linalg.eigvals(symmetrized_dispersion_matrix(lin, Qbar, k))
    return matched_distance(a, b)


def _relative_det(X: np.ndarray) -> float:
    """``|det X|`` divided by the Hadamard bound ``prod_j ||X[:, j]||``."""
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        return 0.0
    sign, logdet = np.linalg.slogdet(X)
    if sign == 0:
        return 0.0
    return float(np.exp(logdet - np.sum(np.log(norms))))


def pencil_roots(A: np.ndarray, B: np.ndarray, rtol: float = INFINITE_ROOT_RTOL) -> tuple[np.ndarray, int]:
    """Finite eigenvalues ``k`` of ``A v = k B v`` and the number of infinite ones.

    Each homogeneous pair ``(a, b)`` is normalized to unit length; the root
    is infinite when ``|b| <= rtol * ||B||``.
    """
    try:
        (alpha, beta) = scipy.linalg.eig(A, B, right=False, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"generalized eigensolver failed: {exc}", matrix=(A, B)) from exc
    norm = np.hypot(np.abs(alpha), np.abs(beta))
    alpha, beta = alpha / norm, beta / norm
    infinite = np.abs(beta) <= rtol * np.linalg.norm(B, 2)
    return sort_roots(alpha[~infinite] / beta[~infinite]), int(infinite.sum())


def space_dispersion_1d(lin: LinearizedSystem, Qbar=None, omega: float = 1.0, tol: float = SPACE_TOL) -> SpaceDispersionPoint:
    """Complex wave numbers ``k(Omega)`` for a real frequency ``Omega > 0``."""
    if lin.dim != 1:
        raise UnsupportedError("spatial dispersion is defined for one-dimensional processes only")
    if not omega > 0:
        raise ParameterError(f"frequency must be strictly positive, got {omega}")
    Q = source_matrix(lin, Qbar)
    n = lin.size
    A1 = lin.Abar[0]
    ks, n_inf = pencil_roots(omega * np.eye(n) + 1j * Q, A1.astype(complex))
    if len(ks) == 0:
        raise DegeneratePencilError(f"all {n} roots are infinite at omega={omega}", matrix=A1)
    det_res = max(_relative_det(k * A1 - 1j * Q - omega * np.eye(n)) for k in ks)
    mod2 = np.abs(ks) ** 2
    worst = float(np.max(ks.real * ks.imag / mod2))
    return SpaceDispersionPoint(
        omega=float(omega), ks=ks, n_infinite=n_inf, worst_product=worst, det_residual=det_res, tol=tol
    )


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("HME_STABILITY_WORKERS", "1")))
    except ValueError:
        return 1


def sweep(func, points, workers: int | None = None) -> list:
    """Evaluate ``func`` at every point, in order, optionally on a thread pool."""
    workers = _workers() if workers is None else workers
    if workers <= 1:
        return [func(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, points))


def time_sweep(lin: LinearizedSystem, Qbar, ks, tol: float = TIME_TOL, workers: int | None = None) -> list[TimeDispersionPoint]:
    return sweep(lambda k: time_dispersion(lin, Qbar, k, tol), list(ks), workers)


def space_sweep(lin: LinearizedSystem, Qbar, omegas, tol: float = SPACE_TOL, workers: int | None = None) -> list[SpaceDispersionPoint]:
    return sweep(lambda w: space_dispersion_1d(lin, Qbar, w, tol), list(omegas), workers)


@dataclass
class LemmaStats:
    trials: int
    n: int
    min_imag: float = np.inf
    max_product: float = -np.inf
    time_violations: int = 0
    space_violations: int = 0
    infinite_roots: int = 0
    tol: float = 1e-10
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.time_violations == 0 and self.space_violations == 0


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    G = rng.standard_normal((n, n)) / np.sqrt(n)
    return 0.5 * (G + G.T)


def random_nsd(rng: np.random.Generator, n: int) -> np.ndarray:
    """``-G G^T`` with a random rank between 0 and ``n``."""
    rank = int(rng.integers(0, n + 1))
    G = rng.standard_normal((n, rank)) / np.sqrt(n)
    return -(G @ G.T)


def check_lemmas(A: np.ndarray, B: np.ndarray, lam: float, tol: float = 1e-10) -> tuple[float, float, int]:
    """Smallest ``Im`` eigenvalue of ``A - iB`` and worst normalized ``k_r k_i``.

    The second quantity is taken over finite roots of
    ``det(k A - i B - lam I) = 0``.
    """
    eig = np.linalg.eigvals(A - 1j * B)
    n = len(A)
    ks, n_inf = pencil_roots(lam * np.eye(n) + 1j * B, A.astype(complex))
    products = ks.real * ks.imag / np.abs(ks) ** 2 if len(ks) else np.zeros(0)
    return float(eig.imag.min()), float(products.max()) if len(ks) else -np.inf, n_inf


def lemma_property_harness(trials: int = 1000, n: int = 8, seed: int = 0, tol: float = 1e-10) -> LemmaStats:
    """Random checks of the two eigenvalue lemmas for symmetric ``A`` and NSD ``B``."""
    if not 1 <= n <= 32:
        raise ParameterError("matrix size must be between 1 and 32")
    rng = np.random.default_rng(seed)
    stats = LemmaStats(trials=trials, n=n, tol=tol)
    for trial in range(trials):
        A = random_symmetric(rng, n)
        B = random_nsd(rng, n)
        lam = float(rng.uniform(0.05, 5.0))
        min_im, max_prod, n_inf = check_lemmas(A, B, lam, tol)
        stats.min_imag = min(stats.min_imag, min_im)
        stats.max_product = max(stats.max_product, max_prod)
        stats.infinite_roots += n_inf
        bad_time, bad_space = min_im < -tol, max_prod > tol
        stats.time_violations += bad_time
        stats.space_violations += bad_space
        if bad_time or bad_space:
            stats.failures.append(trial)
    return stats
