"""Coefficient matrices of the hyperbolic moment equations (HME).

The unknown vector ``w`` holds ``rho`` at ``0``, ``u_i`` at ``e_i``,
``p_ij / (1 + delta_ij)`` at ``e_i + e_j`` and the Hermite coefficients
``f_alpha`` for ``3 <= |alpha| <= M``.  In these variables the HME read

    D(w) dw/dt + sum_d M_d(w) D(w) dw/dx_d = S(w),

and, multiplying by ``D^{-1}``, ``dw/dt + sum_d A_d dw/dx_d = S`` with
``A_d = D^{-1} M_d D``.  Spatial directions are addressed by zero-based
``axis`` arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .exceptions import ParameterError, StateError, UnsupportedError
from .moment_basis import MomentBasis, MultiIndexSet, add, degree, sub, unit


def _put(mat, index_set: MultiIndexSet, row, col, value) -> None:
    """``mat[row, col] += value`` unless either index is absent."""
    i = index_set.position(row)
    j = index_set.position(col)
    if i is not None and j is not None:
        mat[i, j] += value


@dataclass(frozen=True)
class MomentMacro:
    """Macroscopic quantities and the full Hermite coefficient vector of a state."""

    f: np.ndarray
    rho: float
    u: np.ndarray
    theta: float
    p: float
    sigma: np.ndarray
    heat_flux: np.ndarray


@dataclass(frozen=True, eq=False)
class MomentState:
    """A point ``w`` of the HME state space."""

    basis: MomentBasis
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.shape != (len(self.basis),):
            raise StateError(f"state vector has shape {w.shape}, expected ({len(self.basis)},)")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if not self.rho > 0:
            raise StateError(f"density must be positive, got {self.rho}")
        if not self.theta > 0:
            raise StateError(f"temperature must be positive, got {self.theta}")

    @classmethod
    def equilibrium(cls, basis: MomentBasis, rho: float = 1.0, theta: float = 1.0, u=None) -> "MomentState":
        """Local Maxwellian: ``P = rho theta I`` and no higher coefficients."""
        dim = basis.dim
        w = np.zeros(len(basis))
        w[basis.position((0,) * dim)] = rho
        for i in range(dim):
            if u is not None:
                w[basis.position(unit(dim, i))] = u[i]
            w[basis.position(unit(dim, i, 2))] = rho * theta / 2
        return cls(basis, w)

    @classmethod
    def from_dict(cls, basis: MomentBasis, values: dict, rho: float = 1.0, theta: float = 1.0) -> "MomentState":
        """Equilibrium state overridden by ``{multi-index: w value}`` entries."""
        w = np.array(cls.equilibrium(basis, rho, theta).w)
        for alpha, value in values.items():
            pos = basis.position(alpha)
            if pos is None:
                raise ParameterError(f"multi-index {alpha} is not part of the basis")
            w[pos] = value
        return cls(basis, w)

    def at(self, alpha: Sequence[int]) -> float:
        pos = self.basis.position(alpha)
        return 0.0 if pos is None else float(self.w[pos])

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def rho(self) -> float:
        return self.at((0,) * self.dim)

    @property
    def u(self) -> np.ndarray:
        return np.array([self.at(unit(self.dim, i)) for i in range(self.dim)])

    def pressure_tensor(self) -> np.ndarray:
        dim = self.dim
        P = np.empty((dim, dim))
        for i in range(dim):
            for j in range(dim):
                P[i, j] = (1 + (i == j)) * self.at(add(unit(dim, i), unit(dim, j)))
        return P

    @property
    def theta(self) -> float:
        return float(np.trace(self.pressure_tensor())) / (self.dim * self.rho)


def state_to_moments(s: MomentState) -> MomentMacro:
    """Hermite coefficients ``f_alpha`` for every basis slot, plus macroscopic fields."""
    basis, dim = s.basis, s.dim
    rho, theta = s.rho, s.theta
    p = rho * theta
    P = s.pressure_tensor()
    sigma = P - p * np.eye(dim)
    f = np.array(s.w)
    for alpha_pos, alpha in enumerate(basis.indices):
        deg = degree(alpha)
        if deg == 1:
            f[alpha_pos] = 0.0
        elif deg == 2:
            i, j = [d for d in range(dim) for _ in range(alpha[d])]
            f[alpha_pos] = sigma[i, j] / (1 + (i == j))
    fmap = lambda beta: _f_at(basis, f, beta)  # noqa: E731
    # q = 1/2 int |xi - u|^2 (xi - u) f; the basis functions are d^alpha omega,
    # so odd-degree coefficients enter with a minus sign
    q = -np.array(
        [2 * fmap(unit(dim, i, 3)) + sum(fmap(add(unit(dim, i), unit(dim, d, 2))) for d in range(dim)) for i in range(dim)]
    )
    return MomentMacro(f=f, rho=rho, u=s.u, theta=theta, p=p, sigma=sigma, heat_flux=q)


def _f_at(basis, f, beta) -> float:
    pos = basis.position(beta)
    return 0.0 if pos is None else float(f[pos])


def assemble_D(s: MomentState) -> np.ndarray:
    """Lower triangular ``D(w)`` (time-derivative coefficient matrix)."""
    basis, dim = s.basis, s.dim
    m = state_to_moments(s)
    rho, theta = m.rho, m.theta
    zero = (0,) * dim
    n = len(basis)
    D = np.eye(n)
    for alpha in basis.indices:
        for d in range(dim):
            ed = unit(dim, d)
            _put(D, basis, alpha, ed, _f_at(basis, m.f, sub(alpha, ed)))
            _put(D, basis, alpha, zero, -theta / (2 * rho) * _f_at(basis, m.f, sub(alpha, unit(dim, d, 2))))
        if degree(alpha) >= 3:
            trace = sum(_f_at(basis, m.f, sub(alpha, unit(dim, d, 2))) for d in range(dim))
            for k in range(dim):
                _put(D, basis, alpha, unit(dim, k, 2), trace / (dim * rho))
    for d in range(dim):
        _put(D, basis, unit(dim, d), unit(dim, d), -1.0)
    return D


def assemble_Dinv(s: MomentState) -> np.ndarray:
    """Closed-form inverse of :func:`assemble_D`."""
    basis, dim = s.basis, s.dim
    m = state_to_moments(s)
    rho, theta = m.rho, m.theta
    zero = (0,) * dim
    Dinv = np.eye(len(basis))
    for alpha in basis.indices:
        for d in range(dim):
            ed = unit(dim, d)
            _put(Dinv, basis, alpha, ed, -_f_at(basis, m.f, sub(alpha, ed)) / rho)
        if degree(alpha) >= 3:
            trace = sum(_f_at(basis, m.f, sub(alpha, unit(dim, d, 2))) for d in range(dim))
            for k in range(dim):
                _put(Dinv, basis, alpha, unit(dim, k, 2), -trace / (dim * rho))
    for d in range(dim):
        _put(Dinv, basis, unit(dim, d), unit(dim, d), 1.0 / rho)
        _put(Dinv, basis, unit(dim, d, 2), zero, theta / 2)
    return Dinv


def _transport_matrix(index_set: MultiIndexSet, order: int, axis: int, theta: float, u_d: float) -> np.ndarray:
    dim = index_set.dim
    if not 0 <= axis < dim:
        raise ParameterError(f"axis must be in [0, {dim}), got {axis}")
    ed = unit(dim, axis)
    M = np.zeros((len(index_set), len(index_set)))
    for alpha in index_set.indices:
        _put(M, index_set, alpha, sub(alpha, ed), theta)
        _put(M, index_set, alpha, alpha, u_d)
        if degree(alpha) != order:
            _put(M, index_set, alpha, add(alpha, ed), alpha[axis] + 1)
    return M


def assemble_M(s: MomentState, axis: int) -> np.ndarray:
    """Tridiagonal-in-``axis`` transport matrix ``M_d``; depends on ``u_d`` and ``theta`` only."""
    return _transport_matrix(s.basis, s.basis.order, axis, s.theta, s.u[axis] if 0 <= axis < s.dim else 0.0)


def assemble_A(s: MomentState, axis: int) -> np.ndarray:
    """Flux Jacobian ``A_d = D^{-1} M_d D``."""
    return assemble_Dinv(s) @ assemble_M(s, axis) @ assemble_D(s)


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    D: np.ndarray
    Dinv: np.ndarray
    M: tuple
    A: tuple


def assemble_system(s: MomentState) -> SystemMatrices:
    D, Dinv = assemble_D(s), assemble_Dinv(s)
    M = tuple(assemble_M(s, d) for d in range(s.dim))
    return SystemMatrices(D=D, Dinv=Dinv, M=M, A=tuple(Dinv @ Md @ D for Md in M))


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    """Dimensionless linearization at a Maxwellian ``(rho0, u = 0, theta0)``.

    ``Qbar`` is ``None`` until a collision Jacobian is attached with
    :meth:`with_qbar`.  The characteristic length is fixed to 1.
    """

    index_set: MultiIndexSet
    rho0: float
    theta0: float
    Dbar: np.ndarray
    Mbar: tuple
    T: np.ndarray
    Lambda0: np.ndarray
    Lambda1: np.ndarray
    Qbar: np.ndarray | None = None
    system: str = "hme"
    Abar: tuple = field(init=False)

    def __post_init__(self):
        Dbar_inv = np.linalg.inv(self.Dbar)
        object.__setattr__(self, "Abar", tuple(Dbar_inv @ Md @ self.Dbar for Md in self.Mbar))

    @property
    def dim(self) -> int:
        return self.index_set.dim

    @property
    def size(self) -> int:
        return len(self.index_set)

    @property
    def Dbar_inv(self) -> np.ndarray:
        return np.linalg.inv(self.Dbar)

    @property
    def D_eq(self) -> np.ndarray:
        """``D(w_eq) = Lambda1 Dbar Lambda0^{-1}``."""
        return self.Lambda1 @ self.Dbar @ np.linalg.inv(self.Lambda0)

    def with_qbar(self, Qbar: np.ndarray) -> "LinearizedSystem":
        Qbar = np.asarray(Qbar, dtype=float)
        if Qbar.shape != (self.size, self.size):
            raise ParameterError(f"Qbar has shape {Qbar.shape}, expected {(self.size, self.size)}")
        return replace(self, Qbar=Qbar)

    def symmetrized_transport(self, axis: int) -> np.ndarray:
        Tinv = np.diag(1.0 / np.diag(self.T))
        return Tinv @ self.Mbar[axis] @ self.T


def scaling_matrices(index_set: MultiIndexSet, rho0: float, theta0: float) -> tuple[np.ndarray, np.ndarray]:
    """``Lambda0`` and ``Lambda1``; they differ only on the degree-one slots."""
    deg = index_set.degrees()
    lam1 = rho0 * theta0 ** (deg / 2)
    lam0 = np.where(deg == 1, np.sqrt(theta0), lam1)
    return np.diag(lam0), np.diag(lam1)


def linearize(rho0: float, theta0: float, basis: MomentBasis) -> LinearizedSystem:
    """Linearized HME at the Maxwellian with density ``rho0`` and temperature ``theta0``."""
    if not (rho0 > 0 and theta0 > 0):
        raise ParameterError("equilibrium density and temperature must be positive")
    dim = basis.dim
    n = len(basis)
    Dbar = np.eye(n)
    for d in range(dim):
        _put(Dbar, basis, unit(dim, d, 2), (0,) * dim, -0.5)
    Mbar = tuple(_transport_matrix(basis, basis.order, d, 1.0, 0.0) for d in range(dim))
    T = np.diag(1.0 / np.sqrt(basis.factorials()))
    lam0, lam1 = scaling_matrices(basis, rho0, theta0)
    return LinearizedSystem(
        index_set=basis, rho0=float(rho0), theta0=float(theta0), Dbar=Dbar, Mbar=Mbar, T=T, Lambda0=lam0, Lambda1=lam1
    )


def assemble_grad_flux_1d(s: MomentState) -> np.ndarray:
    """``B_1`` of the one-dimensional Grad system ``D dw/dt + B_1 dw/dx = S``.

    Grad's system differs from HME only in the rows ``|alpha| = M``, where the
    velocity- and temperature-gradient contributions of the truncated
    ``f_{M+1}`` equation are kept:
    ``(M+1) f_M du/dx + (M+1)/2 f_{M-1} dtheta/dx``.
    The temperature gradient is expressed in ``w`` through ``theta = p / rho``:
    ``dtheta = (1/rho) [(2/D) sum_d dw_{2e_d} - theta dw_0]``.
    """
    if s.dim != 1:
        raise UnsupportedError("the Grad flux comparison is implemented for one dimension only")
    basis = s.basis
    M = basis.order
    m = state_to_moments(s)
    B = assemble_M(s, 0) @ assemble_D(s)
    row = basis.position((M,))
    B[row, basis.position((1,))] += (M + 1) * _f_at(basis, m.f, (M,))
    dtheta_coeff = 0.5 * (M + 1) * _f_at(basis, m.f, (M - 1,))
    B[row, basis.position((2,))] += dtheta_coeff * 2.0 / m.rho
    B[row, basis.position((0,))] -= dtheta_coeff * m.theta / m.rho
    return B


def grad_flux_jacobian_1d(s: MomentState) -> np.ndarray:
    """``D^{-1} B_1``: the Grad counterpart of ``A_1``."""
    return assemble_Dinv(s) @ assemble_grad_flux_1d(s)


def linearize_grad_1d(rho0: float, theta0: float, basis: MomentBasis) -> np.ndarray:
    """Dimensionless Grad flux ``Lambda1^{-1} B_1(w_eq) Lambda0 / sqrt(theta0)`` at equilibrium."""
    s = MomentState.equilibrium(basis, rho0, theta0)
    lam0, lam1 = scaling_matrices(basis, rho0, theta0)
    return np.linalg.solve(lam1, assemble_grad_flux_1d(s) @ lam0) / np.sqrt(theta0)
