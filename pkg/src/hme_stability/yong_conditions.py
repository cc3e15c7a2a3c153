"""Yong's first stability condition at the local equilibrium.

The three parts are checked on concrete matrices:

1. ``Q`` is a relaxation: the conserved rows vanish,
   ``rank Q = N - D - 2`` and ``rank Q^2 = rank Q``.  Together these are
   equivalent to the existence of an invertible ``P`` with
   ``P Q = diag(0, Qhat) P``.
2. ``A0 = ((Lambda1 T)^{-1} D)^T ((Lambda1 T)^{-1} D)`` is symmetric positive
   definite and ``A0 A_d`` is symmetric.
3. ``A0 Q + Q^T A0`` is negative semi-definite with the kernel of ``Q``.

All checks run in the co-moving frame ``u = 0``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .collision_models import max_abs, unscale_Q
from .exceptions import UnsupportedError
from .hme_assembly import LinearizedSystem, MomentState, assemble_D, assemble_system, scaling_matrices
from .moment_basis import MultiIndexSet

RANK_RTOL = 1e-10
A0_SYM_TOL = 1e-11
ANGLE_TOL = 1e-8
KERNEL_RTOL = 1e-8


def numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def null_space(A: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    return scipy.linalg.null_space(A, rcond=rtol)


def relative_asymmetry(X: np.ndarray) -> float:
    """``max|X - X^T| / max|X|``."""
    scale = max_abs(X)
    return max_abs(X - X.T) / scale if scale else 0.0


@dataclass
class Condition1:
    conserved_rows_zero: bool
    conserved_row_residual: float
    rank_q: int
    rank_q2: int
    expected_rank: int
    passed: bool


@dataclass
class Condition2:
    max_sym_residual: list
    min_eig_a0: float
    states_checked: int
    passed: bool


@dataclass
class Condition3:
    sym_residual: float
    max_eig: float
    kernel_dim: int
    expected_kernel_dim: int
    kernel_angle: float
    ker_match: bool
    identity_residual: float
    p_reconstruction_residual: float
    joint_p_residual: float
    joint_p_flag: bool
    passed: bool


@dataclass
class YongReport:
    system: str
    cond1: Condition1
    cond2: Condition2
    cond3: Condition3
    overall: bool = field(init=False)

    def __post_init__(self):
        self.overall = bool(self.cond1.passed and self.cond2.passed and self.cond3.passed)

    def to_dict(self) -> dict:
        return asdict(self)


def check_condition1(Q: np.ndarray, index_set: MultiIndexSet, tol: float = 1e-10) -> Condition1:
    """Relaxation structure of ``Q`` at equilibrium."""
    zero, first, second = index_set.conserved_positions()
    rows = [Q[zero]] + [Q[i] for i in first] + [sum(Q[i] for i in second)]
    scale = max(max_abs(Q), 1.0)
    residual = max(max_abs(r) for r in rows) / scale
    n, dim = len(index_set), index_set.dim
    expected = n - dim - 2
    rank_q = numerical_rank(Q)
    rank_q2 = numerical_rank(Q @ Q)
    rows_ok = residual <= tol
    return Condition1(
        conserved_rows_zero=bool(rows_ok),
        conserved_row_residual=float(residual),
        rank_q=rank_q,
        rank_q2=rank_q2,
        expected_rank=expected,
        passed=bool(rows_ok and rank_q == expected and rank_q2 == rank_q),
    )


def symmetrizer(D: np.ndarray, lambda1: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``A0 = ((Lambda1 T)^{-1} D)^T ((Lambda1 T)^{-1} D)`` for diagonal ``Lambda1`` and ``T``."""
    scale = 1.0 / (np.diag(lambda1) * np.diag(T))
    F = scale[:, None] * D
    return F.T @ F


def build_A0(s: MomentState) -> np.ndarray:
    """Symmetrizer at an HME state, using the state's own density and temperature."""
    if np.any(s.u != 0):
        raise UnsupportedError("the symmetrizer is built in the co-moving frame u = 0")
    _, lam1 = scaling_matrices(s.basis, s.rho, s.theta)
    T = np.diag(1.0 / np.sqrt(s.basis.factorials()))
    return symmetrizer(assemble_D(s), lam1, T)


def condition2_residuals(A0: np.ndarray, A: tuple) -> tuple[list, float]:
    """Relative asymmetry of ``A0 A_d`` per direction and the smallest eigenvalue of ``A0``."""
    return [relative_asymmetry(A0 @ Ad) for Ad in A], float(np.linalg.eigvalsh(A0)[0])


def check_condition2(pairs, tol: float = A0_SYM_TOL) -> Condition2:
    """Condition 2 over ``(A0, (A_1, ..., A_D))`` pairs, one per state."""
    worst = None
    min_eig = np.inf
    count = 0
    for A0, A in pairs:
        res, lo = condition2_residuals(A0, A)
        worst = res if worst is None else [max(a, b) for a, b in zip(worst, res)]
        min_eig = min(min_eig, lo)
        count += 1
    worst = worst or []
    return Condition2(
        max_sym_residual=worst,
        min_eig_a0=float(min_eig),
        states_checked=count,
        passed=bool(count and max(worst) <= tol and min_eig > 0),
    )


def check_condition2_states(states, tol: float = A0_SYM_TOL) -> Condition2:
    """Condition 2 over a collection of HME states (all with ``u = 0``)."""
    return check_condition2(((build_A0(s), assemble_system(s).A) for s in states), tol)


def random_states(basis, count: int, rng: np.random.Generator, amplitude: float = 0.1) -> list[MomentState]:
    """Non-equilibrium states with ``u = 0`` and ``|f_alpha| <= amplitude``."""
    dim = basis.dim
    states = []
    for _ in range(count):
        rho = rng.uniform(0.5, 2.0)
        theta = rng.uniform(0.5, 2.0)
        w = np.zeros(len(basis))
        for pos, alpha in enumerate(basis.indices):
            deg = sum(alpha)
            if deg == 0:
                w[pos] = rho
            elif deg == 2:
                if max(alpha) == 2:
                    w[pos] = rho * theta / 2
                else:
                    w[pos] = rng.uniform(-amplitude, amplitude)
            elif deg >= 3:
                w[pos] = rng.uniform(-amplitude, amplitude)
        # trace-free perturbation of the normal stresses keeps theta fixed
        diag = [basis.position(tuple(2 * (d == i) for d in range(dim))) for i in range(dim)]
        eps = rng.uniform(-amplitude, amplitude, dim)
        w[diag] += eps - eps.mean()
        states.append(MomentState(basis, w))
    return states


def _conserved_kernel_angle(Sym: np.ndarray, Q: np.ndarray, k_sym: int) -> float:
    eigval, eigvec = np.linalg.eigh(Sym)
    order = np.argsort(np.abs(eigval))
    ker_sym = eigvec[:, order[:k_sym]]
    ker_q = null_space(Q)
    if ker_q.shape[1] != ker_sym.shape[1] or ker_q.shape[1] == 0:
        return float(np.pi / 2)
    return float(np.max(scipy.linalg.subspace_angles(ker_sym, ker_q)))


def check_condition3(lin: LinearizedSystem, Qbar: np.ndarray | None = None, tol: float = 1e-10) -> Condition3:
    """Coupling inequality at the equilibrium of ``lin``.

    ``tol`` bounds the largest eigenvalue of ``A0 Q + Q^T A0`` and the
    reconstruction residuals, relative to the largest eigenvalue magnitude.
    """
    Qbar = lin.Qbar if Qbar is None else Qbar
    n, dim = lin.size, lin.dim
    Q = unscale_Q(lin, Qbar)
    A0 = symmetrizer(lin.D_eq, lin.Lambda1, lin.T)
    Sym = A0 @ Q + Q.T @ A0
    sym_res = relative_asymmetry(Sym)
    Sym = 0.5 * (Sym + Sym.T)
    eigval, eigvec = np.linalg.eigh(Sym)
    scale = max_abs(eigval) or 1.0
    kernel = np.abs(eigval) <= KERNEL_RTOL * scale
    kernel_dim = int(kernel.sum())
    expected = dim + 2
    angle = _conserved_kernel_angle(Sym, Q, kernel_dim)

    # Sym = 2 sqrt(theta0) (Lambda1 T)^{-T} (T^{-1} Qbar T) (Lambda1 T)^{-1}
    lt = np.diag(lin.Lambda1) * np.diag(lin.T)
    t = np.diag(lin.T)
    Qhat = Qbar * (t[None, :] / t[:, None])
    predicted = 2 * np.sqrt(lin.theta0) * Qhat / (lt[:, None] * lt[None, :])
    identity_res = max_abs(Sym - predicted) / scale

    # P1 from the eigendecomposition of Sym itself: kernel rows first
    order = np.concatenate([np.nonzero(kernel)[0], np.nonzero(~kernel)[0]])
    lam = eigval[order]
    row_scale = np.where(np.arange(n) < kernel_dim, 1.0, np.sqrt(np.abs(lam)))
    P1 = row_scale[:, None] * eigvec[:, order].T
    J = np.diag((np.arange(n) >= kernel_dim).astype(float))
    recon = max_abs(Sym + P1.T @ J @ P1) / scale

    joint = _joint_witness_residual(lin, Qbar, Q, Sym, scale)
    max_eig = float(eigval[-1]) / scale
    passed = (
        sym_res <= tol
        and max_eig <= tol
        and kernel_dim == expected
        and angle <= ANGLE_TOL
        and recon <= tol
        and np.all(eigval[~kernel] < 0)
    )
    return Condition3(
        sym_residual=float(sym_res),
        max_eig=max_eig,
        kernel_dim=kernel_dim,
        expected_kernel_dim=expected,
        kernel_angle=angle,
        ker_match=bool(angle <= ANGLE_TOL),
        identity_residual=float(identity_res),
        p_reconstruction_residual=float(recon),
        joint_p_residual=float(joint),
        joint_p_flag=bool(joint > tol),
        passed=bool(passed),
    )


def _joint_witness_residual(lin, Qbar, Q, Sym, scale) -> float:
    """One ``P`` serving both conditions 1 and 3, built from ``T^{-1} Qbar T``.

    With ``T^{-1} Qbar T = -U diag(0, mu) U^T`` and ``B = Lambda1 T`` take
    ``P = diag(1, sqrt(2 sqrt(theta0) mu)) U^T B^{-1}``.  Then
    ``P Q P^{-1}`` is block diagonal and ``Sym = -P^T diag(0, I) P``.
    Returns the larger of the two (relative) residuals.
    """
    n, dim = lin.size, lin.dim
    t = np.diag(lin.T)
    Qhat = Qbar * (t[None, :] / t[:, None])
    mu, U = np.linalg.eigh(-0.5 * (Qhat + Qhat.T))
    order = np.argsort(mu)
    mu, U = mu[order], U[:, order]
    r = dim + 2
    s = np.ones(n)
    s[r:] = np.sqrt(2 * np.sqrt(lin.theta0) * np.clip(mu[r:], 0, None))
    lt = np.diag(lin.Lambda1) * t
    P = (s[:, None] * U.T) / lt[None, :]
    J = np.diag((np.arange(n) >= r).astype(float))
    res3 = max_abs(Sym + P.T @ J @ P) / scale
    try:
        block = P @ Q @ np.linalg.inv(P)
    except np.linalg.LinAlgError:
        return np.inf
    qscale = max_abs(block) or 1.0
    res1 = max(max_abs(block[:r, :]), max_abs(block[:, :r])) / qscale
    return max(res1, res3)


def yong_report(lin: LinearizedSystem, Qbar: np.ndarray | None, states, tol: float = 1e-10, cond2=None) -> YongReport:
    """All three conditions; condition 2 is evaluated on ``states``.

    A precomputed ``cond2`` report takes precedence over ``states``.
    """
    Qbar = lin.Qbar if Qbar is None else Qbar
    Q = unscale_Q(lin, Qbar)
    return YongReport(
        system=lin.system,
        cond1=check_condition1(Q, lin.index_set, tol),
        cond2=cond2 if cond2 is not None else check_condition2_states(states),
        cond3=check_condition3(lin, Qbar, tol),
    )
