"""Linearized collision Jacobians at the local Maxwellian.

Every ``qbar_*`` function returns the dimensionless Jacobian
``Qbar = (L / sqrt(theta0)) Lambda1^{-1} Q(w_eq) Lambda1`` with ``L = 1``.
Relaxation times passed to these functions are dimensionless, i.e. measured
in units of ``L / sqrt(theta0)``; :meth:`CollisionModel.qbar` converts a
physical relaxation time.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError, UnsupportedError
from .hme_assembly import LinearizedSystem, MomentState, _put, scaling_matrices
from .moment_basis import MomentBasis, add, degree, gauss_hermite, hermite_1d, sub, unit

KINDS = ("bgk", "shakhov", "es-bgk", "binary", "none")

CLOSED_FORM_TOL = 1e-10
QUADRATURE_TOL = 1e-6
KERNEL_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class JacobianResult:
    Qbar: np.ndarray
    symmetry_residual: float
    max_eig: float
    kernel_dim: int
    extra: dict = field(default_factory=dict)


def symmetrized(Qbar: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``T^{-1} Qbar T`` for a diagonal ``T``."""
    t = np.diag(T)
    return Qbar * (t[None, :] / t[:, None])


def max_abs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def kernel_dimension(eigs: np.ndarray, rtol: float = KERNEL_RTOL) -> int:
    scale = max_abs(eigs)
    if scale == 0.0:
        return len(eigs)
    return int(np.sum(np.abs(eigs) <= rtol * scale))


def analyze(Qbar: np.ndarray, T: np.ndarray, **extra) -> JacobianResult:
    """Symmetry residual, largest eigenvalue and kernel size of ``T^{-1} Qbar T``."""
    S = symmetrized(Qbar, T)
    eigs = np.linalg.eigvalsh(0.5 * (S + S.T))
    return JacobianResult(
        Qbar=Qbar,
        symmetry_residual=max_abs(S - S.T),
        max_eig=float(eigs[-1]),
        kernel_dim=kernel_dimension(eigs),
        extra=extra,
    )


def _check_positive(**params):
    for name, value in params.items():
        if not value > 0:
            raise ParameterError(f"{name} must be positive, got {value}")


def _bgk_projector(basis: MomentBasis) -> np.ndarray:
    """``I - sum_{|a|<=1} E_aa - (1/D) sum_ij E_{2e_i, 2e_j}``."""
    dim = basis.dim
    P = np.eye(len(basis))
    for alpha in basis.indices:
        if degree(alpha) <= 1:
            _put(P, basis, alpha, alpha, -1.0)
    for i in range(dim):
        for j in range(dim):
            _put(P, basis, unit(dim, i, 2), unit(dim, j, 2), -1.0 / dim)
    return P


def _T(basis) -> np.ndarray:
    return np.diag(1.0 / np.sqrt(basis.factorials()))


def qbar_bgk(basis: MomentBasis, tau: float) -> JacobianResult:
    _check_positive(tau=tau)
    return analyze(-_bgk_projector(basis) / tau, _T(basis))


def qbar_shakhov(basis: MomentBasis, tau: float, prandtl: float = 2 / 3) -> JacobianResult:
    _check_positive(tau=tau, prandtl=prandtl)
    dim = basis.dim
    inner = _bgk_projector(basis)
    c = (1 - prandtl) / (dim + 2)
    for i, j, k in itertools.product(range(dim), repeat=3):
        row = add(unit(dim, i), unit(dim, k, 2))
        col = add(unit(dim, i), unit(dim, j, 2))
        _put(inner, basis, row, col, -c * (1 + 2 * (i == j)))
    return analyze(-inner / tau, _T(basis))


def esbgk_closed_form(basis: MomentBasis, tau: float, prandtl: float) -> np.ndarray:
    """The closed-form ES-BGK Jacobian as usually displayed.

    It carries no relaxation on the off-diagonal stress slots ``e_i + e_j``,
    ``i != j``; compare :func:`qbar_esbgk`.
    """
    dim = basis.dim
    first = np.eye(len(basis))
    for alpha in basis.indices:
        if degree(alpha) <= 2:
            _put(first, basis, alpha, alpha, -1.0)
    second = np.zeros_like(first)
    for i in range(dim):
        _put(second, basis, unit(dim, i, 2), unit(dim, i, 2), 1.0)
        for j in range(dim):
            _put(second, basis, unit(dim, i, 2), unit(dim, j, 2), -1.0 / dim)
    return -prandtl / tau * first - second / tau


class _Jet:
    """Value and gradient with respect to ``w`` (first-order forward mode)."""

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = float(val)
        self.grad = grad

    def __add__(self, other):
        return _Jet(self.val + other.val, self.grad + other.grad)

    def __sub__(self, other):
        return _Jet(self.val - other.val, self.grad - other.grad)

    def __mul__(self, other):
        if isinstance(other, _Jet):
            return _Jet(self.val * other.val, self.val * other.grad + other.val * self.grad)
        return _Jet(self.val * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _Jet):
            return _Jet(self.val / other.val, (self.grad * other.val - self.val * other.grad) / other.val**2)
        return _Jet(self.val / other, self.grad / other)


def esbgk_source_jets(s: MomentState, prandtl: float) -> dict:
    """``S_alpha = (Pr/tau)(G_alpha - f_alpha)`` with ``tau = 1`` as jets in ``w``.

    ``G_alpha`` are the Hermite coefficients of the anisotropic Gaussian,
    generated by the recursion
    ``G_alpha = (1 - 1/Pr) / (alpha_i rho) sum_d sigma_id G_{alpha - e_i - e_d}``.
    """
    basis, dim = s.basis, s.dim
    n = len(basis)
    var = [_Jet(s.w[i], np.eye(n)[i]) for i in range(n)]
    w = lambda alpha: var[basis.position(alpha)]  # noqa: E731
    rho = w((0,) * dim)
    p = sum((w(unit(dim, d, 2)) for d in range(dim)), _Jet(0.0, np.zeros(n))) * (2.0 / dim)
    sigma = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(dim):
            p_ij = w(add(unit(dim, i), unit(dim, j))) * (1 + (i == j))
            sigma[i][j] = p_ij - p if i == j else p_ij

    f = {}
    for alpha in basis.indices:
        deg = degree(alpha)
        if deg == 1:
            f[alpha] = _Jet(0.0, np.zeros(n))
        elif deg == 2:
            i, j = [d for d in range(dim) for _ in range(alpha[d])]
            f[alpha] = sigma[i][j] * (1.0 / (1 + (i == j)))
        else:
            f[alpha] = w(alpha)

    G = {}
    zero = _Jet(0.0, np.zeros(n))
    factor = 1 - 1 / prandtl
    for alpha in basis.indices:
        deg = degree(alpha)
        if deg == 0:
            G[alpha] = rho
        elif deg % 2:
            G[alpha] = zero
        else:
            i = next(d for d in range(dim) if alpha[d] > 0)
            acc = zero
            for d in range(dim):
                lower = sub(sub(alpha, unit(dim, i)), unit(dim, d))
                if min(lower) >= 0:
                    acc = acc + sigma[i][d] * G[lower]
            G[alpha] = acc * factor / (rho * alpha[i])
    return {alpha: (G[alpha] - f[alpha]) * prandtl for alpha in basis.indices}, G


def qbar_esbgk(basis: MomentBasis, tau: float, prandtl: float = 2 / 3, rho0: float = 1.0, theta0: float = 1.0) -> JacobianResult:
    """ES-BGK Jacobian by exact differentiation of the ``G_alpha`` recursion.

    The closed form from :func:`esbgk_closed_form` is assembled as well and the
    elementwise discrepancy is stored in ``extra["closed_form_discrepancy"]``.
    """
    _check_positive(tau=tau, prandtl=prandtl, rho0=rho0, theta0=theta0)
    eq = MomentState.equilibrium(basis, rho0, theta0)
    S, _ = esbgk_source_jets(eq, prandtl)
    J = np.array([S[alpha].grad for alpha in basis.indices])
    _, lam1 = scaling_matrices(basis, rho0, theta0)
    Qbar = np.linalg.solve(lam1, J @ lam1) / tau
    closed = esbgk_closed_form(basis, tau, prandtl)
    diff = Qbar - closed
    return analyze(
        Qbar,
        _T(basis),
        closed_form=closed,
        closed_form_discrepancy=max_abs(diff),
        closed_form_discrepancy_entries=[
            (basis.label(i), basis.label(j), float(diff[i, j])) for i, j in zip(*np.nonzero(np.abs(diff) > 1e-14))
        ],
    )


def _binary_quadrature(basis: MomentBasis, rho0, theta0, b0, n_xi, n_angle):
    """``K_ab = -(1/4) int rho omega omega_1 L(a) L(b) B dn dxi_1 dxi`` in two dimensions."""
    nodes, weights = gauss_hermite(n_xi)
    M = basis.order
    s = np.sqrt(theta0)
    x1, x2 = np.meshgrid(nodes, nodes, indexing="ij")
    v = s * np.stack([x1.ravel(), x2.ravel()], axis=1)
    wv = np.outer(weights, weights).ravel()
    xi = v[:, None, :]
    xi1 = v[None, :, :]
    wpair = (wv[:, None] * wv[None, :]).ravel()
    g = xi1 - xi

    alphas = np.array(basis.indices)
    n = len(basis)
    K = np.zeros((n, n))
    phis = np.pi * np.arange(n_angle) / n_angle
    dphi = np.pi / n_angle

    def he(vel):
        h0 = hermite_1d(M, vel[..., 0], theta0)
        h1 = hermite_1d(M, vel[..., 1], theta0)
        return h0[alphas[:, 0]] * h1[alphas[:, 1]]

    base = (he(xi) + he(xi1)).reshape(n, -1)
    for phi in phis:
        nvec = np.array([np.cos(phi), np.sin(phi)])
        gn = (g @ nvec)[..., None] * nvec
        Lmat = (he(xi + gn) + he(xi1 - gn)).reshape(n, -1) - base
        K += (Lmat * wpair) @ Lmat.T * dphi
    return -0.25 * rho0 * b0 * K


def qbar_binary(
    basis: MomentBasis, b0: float = 1.0, n_xi: int = 16, n_angle: int = 16, rho0: float = 1.0, theta0: float = 1.0
) -> JacobianResult:
    """Binary-collision Jacobian for a constant (Maxwell-type) kernel in two dimensions.

    Velocities use a tensor Gauss-Hermite rule in each of ``xi`` and
    ``xi_1``; the collision direction ``n`` runs over the half circle with the
    periodic trapezoid rule.  The integrand is polynomial in the velocities
    and a trigonometric polynomial in the angle, so the rule is exact once
    ``n_xi > M`` and ``n_angle > 2 M``.
    """
    if basis.dim != 2:
        raise UnsupportedError("binary collisions are implemented for two velocity dimensions")
    if basis.order > 4:
        raise UnsupportedError("binary collisions are implemented for moment order <= 4")
    if n_xi < 8 or n_angle < 8:
        raise ParameterError("quadrature orders must be at least 8")
    _check_positive(b0=b0, rho0=rho0, theta0=theta0)
    K = _binary_quadrature(basis, rho0, theta0, b0, n_xi, n_angle)
    # chain rule S_alpha = theta^|a| / a! * Sbar_alpha; the w -> f map drops out
    deg = basis.degrees()
    Q = (theta0**deg / basis.factorials())[:, None] * K
    _, lam1 = scaling_matrices(basis, rho0, theta0)
    Qbar = np.linalg.solve(lam1, Q @ lam1) / np.sqrt(theta0)
    return analyze(Qbar, _T(basis), quadrature=(n_xi, n_angle))


def unscale_Q(lin: LinearizedSystem, Qbar: np.ndarray, length: float = 1.0) -> np.ndarray:
    """``Q(w_eq) = (sqrt(theta0) / L) Lambda1 Qbar Lambda1^{-1}``."""
    lam = np.diag(lin.Lambda1)
    return np.sqrt(lin.theta0) / length * Qbar * (lam[:, None] / lam[None, :])


@dataclass(frozen=True)
class CollisionModel:
    """Collision model choice with its physical parameters.

    ``tau`` is the physical relaxation time; :meth:`qbar` converts it to
    units of ``L / sqrt(theta0)``.
    """

    kind: str = "bgk"
    tau: float = 1.0
    prandtl: float = 2 / 3
    b0: float = 1.0
    quad_orders: tuple[int, int] = (16, 16)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown collision model {self.kind!r}; choose from {KINDS}")
        _check_positive(tau=self.tau, prandtl=self.prandtl, b0=self.b0)
        if min(self.quad_orders) < 8:
            raise ParameterError("quadrature orders must be at least 8")

    def qbar(self, basis: MomentBasis, rho0: float = 1.0, theta0: float = 1.0, length: float = 1.0) -> JacobianResult:
        tau = self.tau * math.sqrt(theta0) / length
        if self.kind == "bgk":
            return qbar_bgk(basis, tau)
        if self.kind == "shakhov":
            return qbar_shakhov(basis, tau, self.prandtl)
        if self.kind == "es-bgk":
            return qbar_esbgk(basis, tau, self.prandtl, rho0, theta0)
        if self.kind == "binary":
            res = qbar_binary(basis, self.b0, *self.quad_orders, rho0=rho0, theta0=theta0)
            return analyze(res.Qbar * length, _T(basis), **res.extra)
        return analyze(np.zeros((len(basis), len(basis))), _T(basis))

    @property
    def tolerance(self) -> float:
        return QUADRATURE_TOL if self.kind == "binary" else CLOSED_FORM_TOL
