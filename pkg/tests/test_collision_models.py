import itertools
import math

import numpy as np
import pytest

from hme_stability.collision_models import (
    CollisionModel,
    esbgk_closed_form,
    esbgk_source_jets,
    qbar_bgk,
    qbar_binary,
    qbar_esbgk,
    qbar_shakhov,
    symmetrized,
    unscale_Q,
)
from hme_stability.exceptions import ParameterError, UnsupportedError
from hme_stability.hme_assembly import MomentState, linearize, scaling_matrices, state_to_moments
from hme_stability.moment_basis import HermiteWeight, gauss_hermite, hermite_eval, moment_basis

GRID = [(d, m) for d in (1, 2, 3) for m in range(3, 7) if not (d == 3 and m == 6)]
CLOSED = {
    "bgk": lambda b, tau: qbar_bgk(b, tau),
    "shakhov": lambda b, tau: qbar_shakhov(b, tau, 2 / 3),
    "es-bgk": lambda b, tau: qbar_esbgk(b, tau, 2 / 3),
}


def es_gaussian_coefficients(s, prandtl, n=10):
    """Hermite coefficients of rho N(0, theta I + (1 - 1/Pr) sigma / rho) by quadrature."""
    dim, rho, theta = s.dim, s.rho, s.theta
    sigma = s.pressure_tensor() - rho * theta * np.eye(dim)
    cov = theta * np.eye(dim) + (1 - 1 / prandtl) * sigma / rho
    x, w = gauss_hermite(n)
    grid = np.array(list(itertools.product(x, repeat=dim)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=dim))), axis=1)
    xi = grid @ np.linalg.cholesky(cov).T
    weight = HermiteWeight(np.zeros(dim), theta)
    return np.array(
        [
            rho * theta ** sum(a) / math.prod(map(math.factorial, a)) * np.sum(wts * hermite_eval(a, xi, weight))
            for a in s.basis.indices
        ]
    )


def es_source_by_quadrature(basis, w, prandtl):
    """``Pr (G - f)`` with ``G`` from quadrature and ``f`` from the state."""
    s = MomentState(basis, w)
    return prandtl * (es_gaussian_coefficients(s, prandtl) - state_to_moments(s).f)


@pytest.mark.parametrize("dim,order", GRID)
@pytest.mark.parametrize("kind", sorted(CLOSED))
def test_closed_form_suite(kind, dim, order):
    tau = 0.6
    b = moment_basis(dim, order)
    res = CLOSED[kind](b, tau)
    assert res.symmetry_residual <= 1e-12
    assert res.max_eig <= 1e-10 / tau
    assert res.kernel_dim == dim + 2
    lin = linearize(1.0, 1.0, b)
    Q = res.Qbar
    for lhs in (lin.Dbar_inv @ Q @ lin.Dbar, Q @ lin.Dbar_inv, lin.Dbar @ Q):
        assert np.max(np.abs(lhs - Q)) <= 1e-12


@pytest.mark.parametrize("dim,order", [(1, 4), (2, 4), (3, 3)])
def test_bgk_is_scaled_projector(dim, order):
    tau = 1.7
    Q = qbar_bgk(moment_basis(dim, order), tau).Qbar
    P = -tau * Q
    np.testing.assert_allclose(P @ P, P, atol=1e-14)
    assert np.linalg.matrix_rank(P) == len(P) - dim - 2


def test_shakhov_one_dimensional_order_three():
    Q = qbar_shakhov(moment_basis(1, 3), 1.0, 2 / 3).Qbar
    np.testing.assert_allclose(Q, np.diag([0, 0, 0, -2 / 3]), atol=1e-15)


@pytest.mark.parametrize("dim,order", [(1, 5), (2, 4), (3, 4)])
def test_unit_prandtl_reduces_to_bgk(dim, order):
    b = moment_basis(dim, order)
    bgk = qbar_bgk(b, 0.9).Qbar
    np.testing.assert_allclose(qbar_shakhov(b, 0.9, 1.0).Qbar, bgk, atol=1e-15)
    np.testing.assert_allclose(qbar_esbgk(b, 0.9, 1.0).Qbar, bgk, atol=1e-14)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_shakhov_heat_flux_relaxes_at_prandtl_rate(dim):
    # q is linear in the third-order slots; along Q it decays at rate Pr / tau
    b = moment_basis(dim, 4)
    pr, tau = 0.4, 1.3
    Q = qbar_shakhov(b, tau, pr).Qbar
    base = np.array(MomentState.equilibrium(b).w)

    def heat_flux(v):
        return state_to_moments(MomentState(b, base + v)).heat_flux

    rng = np.random.default_rng(dim)
    v = np.where(b.degrees() == 3, rng.normal(size=len(b)), 0.0)
    np.testing.assert_allclose(heat_flux(Q @ v), -pr / tau * heat_flux(v), atol=1e-12)


@pytest.mark.parametrize("dim,order", [(1, 4), (2, 3), (2, 5), (3, 3)])
def test_es_gaussian_recursion_matches_quadrature(dim, order):
    rng = np.random.default_rng(dim + order)
    b = moment_basis(dim, order)
    w = np.array(MomentState.equilibrium(b, 1.3, 0.9).w)
    for pos, alpha in enumerate(b.indices):
        if sum(alpha) == 2:
            w[pos] += rng.uniform(-0.1, 0.1)
    s = MomentState(b, w)
    _, G = esbgk_source_jets(s, 0.7)
    np.testing.assert_allclose([G[a].val for a in b.indices], es_gaussian_coefficients(s, 0.7), atol=1e-13)


@pytest.mark.parametrize("dim,order", [(1, 3), (2, 3), (2, 4), (3, 3)])
def test_es_jacobian_against_finite_differences(dim, order):
    pr, rho0, theta0, h = 0.7, 1.2, 0.8, 1e-6
    b = moment_basis(dim, order)
    w0 = np.array(MomentState.equilibrium(b, rho0, theta0).w)
    n = len(b)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (es_source_by_quadrature(b, w0 + e, pr) - es_source_by_quadrature(b, w0 - e, pr)) / (2 * h)
    _, lam1 = scaling_matrices(b, rho0, theta0)
    expected = np.linalg.solve(lam1, J @ lam1)
    got = qbar_esbgk(b, 1.0, pr, rho0, theta0).Qbar
    np.testing.assert_allclose(got, expected, atol=1e-7)


def test_es_closed_form_discrepancy_location():
    b = moment_basis(2, 4)
    res = qbar_esbgk(b, 1.0, 2 / 3)
    labels = {(i, j) for i, j, _ in res.extra["closed_form_discrepancy_entries"]}
    assert labels == {("1,1", "1,1")}
    assert res.extra["closed_form_discrepancy"] == pytest.approx(1.0)
    one_d = qbar_esbgk(moment_basis(1, 5), 1.0, 2 / 3)
    assert one_d.extra["closed_form_discrepancy"] == 0.0
    np.testing.assert_array_equal(one_d.extra["closed_form"], esbgk_closed_form(moment_basis(1, 5), 1.0, 2 / 3))


@pytest.mark.parametrize("order", [3, 4])
def test_binary_suite(order):
    b = moment_basis(2, order)
    res = qbar_binary(b, b0=1.0, n_xi=16, n_angle=16)
    assert res.symmetry_residual <= 1e-6
    assert res.max_eig <= 1e-6
    assert res.kernel_dim == 4
    for alpha in [(0, 0), (0, 1), (1, 0)]:
        assert np.max(np.abs(res.Qbar[b.position(alpha)])) <= 1e-6
    energy = res.Qbar[b.position((2, 0))] + res.Qbar[b.position((0, 2))]
    assert np.max(np.abs(energy)) <= 1e-6


def test_binary_rule_is_exact():
    b = moment_basis(2, 3)
    coarse = qbar_binary(b, n_xi=8, n_angle=8).Qbar
    fine = qbar_binary(b, n_xi=16, n_angle=16).Qbar
    assert np.max(np.abs(coarse - fine)) <= 1e-12


@pytest.mark.parametrize("rho0,theta0,b0", [(2.0, 1.0, 1.0), (1.0, 4.0, 1.0), (1.5, 0.5, 2.0)])
def test_binary_scaling(rho0, theta0, b0):
    # a constant kernel has collision frequency rho0 * b0; Qbar carries the 1/sqrt(theta0) time unit
    b = moment_basis(2, 3)
    ref = qbar_binary(b).Qbar
    got = qbar_binary(b, b0=b0, rho0=rho0, theta0=theta0).Qbar
    np.testing.assert_allclose(got, ref * rho0 * b0 / np.sqrt(theta0), atol=1e-13)


def test_binary_restrictions():
    with pytest.raises(UnsupportedError):
        qbar_binary(moment_basis(1, 3))
    with pytest.raises(UnsupportedError):
        qbar_binary(moment_basis(2, 5))
    with pytest.raises(ParameterError):
        qbar_binary(moment_basis(2, 3), n_xi=4)


@pytest.mark.parametrize("kwargs", [{"tau": 0.0}, {"prandtl": -1.0}, {"b0": 0.0}, {"kind": "hard-sphere"}, {"quad_orders": (4, 16)}])
def test_model_parameters_validated(kwargs):
    with pytest.raises(ParameterError):
        CollisionModel(**kwargs)


def test_relaxation_time_units():
    b = moment_basis(1, 4)
    res = CollisionModel("bgk", tau=1.0).qbar(b, rho0=1.0, theta0=4.0)
    np.testing.assert_allclose(res.Qbar, qbar_bgk(b, 2.0).Qbar)


def test_none_model_is_zero():
    res = CollisionModel("none").qbar(moment_basis(2, 3))
    assert not np.any(res.Qbar)


def test_unscale_roundtrip():
    b = moment_basis(2, 4)
    lin = linearize(1.3, 0.6, b)
    Qbar = qbar_shakhov(b, 1.0).Qbar
    Q = unscale_Q(lin, Qbar)
    lam = lin.Lambda1
    np.testing.assert_allclose(np.linalg.solve(lam, Q @ lam) / np.sqrt(0.6), Qbar, atol=1e-14)
    S = symmetrized(Qbar, lin.T)
    np.testing.assert_allclose(S, S.T, atol=1e-15)
