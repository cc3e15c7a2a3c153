"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import sys
import time
from contextlib import nullcontext

import numpy as np
import pytest

from hme_stability.collision_models import CollisionModel, qbar_binary, symmetrized
from hme_stability.hme_assembly import MomentState, assemble_A, grad_flux_jacobian_1d, linearize, linearize_grad_1d
from hme_stability.moment_basis import moment_basis
from hme_stability.ohme_projection import build_projection, identity_projection, ohme_linearize, run_ohme_checks, run_system_checks
from hme_stability.stability_analysis import lemma_property_harness, space_sweep, time_sweep
from hme_stability.yong_conditions import random_states, yong_report

GRID = [(d, m) for d in (1, 2, 3) for m in range(3, 7) if not (d == 3 and m == 6)]
CLOSED = ["bgk", "shakhov", "es-bgk"]
TAU = 0.6
BINARY_ORDERS = (3, 4)


def models_for(dim, order):
    kinds = list(CLOSED)
    if dim == 2 and order in BINARY_ORDERS:
        kinds.append("binary")
    return [CollisionModel(k, tau=TAU) for k in kinds]


def report(capsys, number, passed, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit else "")
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {timing}  {detail}"
    with capsys.disabled() if capsys is not None else nullcontext():
        print("\n" + line)
    return line


def max_abs(X):
    return float(np.max(np.abs(X))) if np.size(X) else 0.0


def two_dim_wave_vectors(rng, count=100):
    mags = 10 ** rng.uniform(-2, 2, count)
    dirs = rng.normal(size=(count, 2))
    return [k * d / np.linalg.norm(d) for k, d in zip(mags, dirs)]


def collision_suite(lin, tau, tol_sym=1e-12, tol_id=1e-12):
    """Symmetry, NSD, kernel and the three Dbar identities for ``lin.Qbar``."""
    Q = lin.Qbar
    S = symmetrized(Q, lin.T)
    sym = max_abs(S - S.T)
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    kernel = int(np.sum(np.abs(eig) <= 1e-8 * max(max_abs(eig), 1e-300)))
    Dbar, Dinv = lin.Dbar, np.linalg.inv(lin.Dbar)
    ident = max(max_abs(Dinv @ Q @ Dbar - Q), max_abs(Q @ Dinv - Q), max_abs(Dbar @ Q - Q))
    return {
        "sym": sym,
        "max_eig": float(eig[-1]),
        "kernel": kernel,
        "ident": ident,
        "ok_spectral": sym <= tol_sym and eig[-1] <= 1e-10 / tau and kernel == lin.dim + 2,
        "ok_ident": ident <= tol_id,
    }


def criterion_1(capsys=None):
    t0 = time.perf_counter()
    worst = 0.0
    for dim, order in GRID:
        lin = linearize(1.0, 1.0, moment_basis(dim, order))
        for d in range(dim):
            S = lin.symmetrized_transport(d)
            worst = max(worst, max_abs(S - S.T))
    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-12 and elapsed < 10
    return passed, report(capsys, 1, passed, f"max transport asymmetry {worst:.2e} over {len(GRID)} grid points", elapsed, 10)


def criterion_2(capsys=None):
    t0 = time.perf_counter()
    failures, worst = [], {"sym": 0.0, "max_eig": -np.inf, "ident": 0.0}
    for dim, order in GRID:
        b = moment_basis(dim, order)
        lin0 = linearize(1.0, 1.0, b)
        for kind in CLOSED:
            res = collision_suite(lin0.with_qbar(CollisionModel(kind, tau=TAU).qbar(b).Qbar), TAU)
            for key in worst:
                worst[key] = max(worst[key], res[key])
            if not (res["ok_spectral"] and res["ok_ident"]):
                failures.append((kind, dim, order))
    elapsed = time.perf_counter() - t0
    passed = not failures and elapsed < 30
    detail = (
        f"sym {worst['sym']:.2e}, max eig {worst['max_eig']:.2e}, identities {worst['ident']:.2e}, "
        f"{3 * len(GRID)} cases, failures {failures}"
    )
    return passed, report(capsys, 2, passed, detail, elapsed, 30)


def criterion_3(capsys=None):
    t0 = time.perf_counter()
    b = moment_basis(2, 3)
    res = qbar_binary(b, b0=1.0, n_xi=16, n_angle=16)
    conserved = [b.position(a) for a in [(0, 0), (1, 0), (0, 1)]]
    rows = max(max_abs(res.Qbar[conserved]), max_abs(res.Qbar[b.position((2, 0))] + res.Qbar[b.position((0, 2))]))
    elapsed = time.perf_counter() - t0
    passed = (
        res.symmetry_residual <= 1e-6 and res.max_eig <= 1e-6 and res.kernel_dim == 4 and rows <= 1e-6 and elapsed < 120
    )
    detail = f"sym {res.symmetry_residual:.2e}, max eig {res.max_eig:.2e}, kernel {res.kernel_dim}, conserved rows {rows:.2e}"
    return passed, report(capsys, 3, passed, detail, elapsed, 120)


def criterion_4(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, count, bad = np.inf, 0, []
    for dim in (1, 2):
        for order in range(3, 7):
            b = moment_basis(dim, order)
            lin0 = linearize(1.0, 1.0, b)
            ks = [np.array([k]) for k in np.logspace(-2, 2, 200)] if dim == 1 else two_dim_wave_vectors(rng)
            for model in models_for(dim, order):
                points = time_sweep(lin0.with_qbar(model.qbar(b).Qbar), None, ks)
                lo = min(p.min_im for p in points)
                worst = min(worst, lo)
                count += len(points)
                if lo < -1e-9:
                    bad.append((model.kind, dim, order, lo))
    elapsed = time.perf_counter() - t0
    passed = not bad and elapsed < 120
    return passed, report(capsys, 4, passed, f"min Im Omega {worst:.2e} over {count} points, failures {bad}", elapsed, 120)


def criterion_5(capsys=None):
    t0 = time.perf_counter()
    omegas = np.logspace(-2, 2, 100)
    worst_prod, worst_det, roots, bad = -np.inf, 0.0, 0, []
    for order in range(3, 7):
        b = moment_basis(1, order)
        lin0 = linearize(1.0, 1.0, b)
        for model in models_for(1, order):
            points = space_sweep(lin0.with_qbar(model.qbar(b).Qbar), None, omegas)
            prod = max(p.worst_product for p in points)
            det = max(p.det_residual for p in points)
            worst_prod, worst_det = max(worst_prod, prod), max(worst_det, det)
            roots += sum(len(p.ks) for p in points)
            if prod > 1e-9 or det > 1e-8:
                bad.append((model.kind, order))
    elapsed = time.perf_counter() - t0
    passed = not bad and elapsed < 60
    detail = f"max k_r k_i/|k|^2 {worst_prod:.2e}, max det residual {worst_det:.2e}, {roots} roots, failures {bad}"
    return passed, report(capsys, 5, passed, detail, elapsed, 60)


def criterion_6(capsys=None):
    t0 = time.perf_counter()
    bad, cases, worst_recon = [], 0, 0.0
    for dim, order in GRID:
        b = moment_basis(dim, order)
        lin0 = linearize(1.7, 0.6, b)
        states = random_states(b, 20, np.random.default_rng(10 * dim + order))
        for model in models_for(dim, order):
            lin = lin0.with_qbar(model.qbar(b, 1.7, 0.6).Qbar)
            rep = yong_report(lin, None, states, tol=model.tolerance)
            cases += 1
            worst_recon = max(worst_recon, rep.cond3.p_reconstruction_residual)
            if not rep.overall:
                bad.append((model.kind, dim, order))
    elapsed = time.perf_counter() - t0
    passed = not bad and elapsed < 60
    detail = f"{cases} cases x 20 states, max P reconstruction {worst_recon:.2e}, failures {bad}"
    return passed, report(capsys, 6, passed, detail, elapsed, 60)


def _ohme_analogues(order, rng):
    """Criteria 1-6 on the projected matrices at D = 2; returns per-check verdicts and the identity residual."""
    b = moment_basis(2, order)
    lin0, proj = ohme_linearize(1.0, 1.0, b)
    t = np.diag(lin0.T)
    c1 = max(max_abs(M * (t[None, :] / t[:, None]) - (M * (t[None, :] / t[:, None])).T) for M in lin0.Mbar) <= 1e-12
    spectral, ident = True, 0.0
    for kind in CLOSED:
        res = collision_suite(assemble(b, proj, CollisionModel(kind, tau=TAU)), TAU)
        spectral &= bool(res["ok_spectral"])
        ident = max(ident, res["ident"])
    c3 = True
    if order in BINARY_ORDERS:
        lin_b = assemble(b, proj, CollisionModel("binary"))
        res = collision_suite(lin_b, 1.0, tol_sym=1e-6, tol_id=1e-6)
        c3 = bool(res["sym"] <= 1e-6 and res["max_eig"] <= 1e-6 and res["kernel"] == 4)
    c4 = c6 = True
    ks = two_dim_wave_vectors(rng)
    for model in models_for(2, order):
        lin = assemble(b, proj, model)
        c4 &= min(p.min_im for p in time_sweep(lin, None, ks)) >= -1e-9
        rep = run_ohme_checks(b, model, n_states=20, seed=order)
        c6 &= rep.passed
    return {"1": c1, "2-spectral": spectral, "2-identities": ident <= 1e-12, "3": c3, "4": c4, "6": c6}, ident


def assemble(b, proj, model):
    lin, _ = ohme_linearize(1.0, 1.0, b, model.qbar(b).Qbar)
    return lin


def criterion_7(capsys=None):
    t0 = time.perf_counter()
    counts = [build_projection(moment_basis(3, m)).n_ordered for m in (3, 4, 5)]
    counts_ok = counts == [13, 26, 45]

    # D = 1: the projection is the identity and the shared runner gives identical reports
    compat = True
    for order in range(3, 7):
        b = moment_basis(1, order)
        p, q = build_projection(b), identity_projection(b)
        compat &= bool(np.array_equal(p.Pp, np.eye(len(b))) and np.array_equal(p.T_O, q.T_O))
        for kind in CLOSED:
            h = run_system_checks(b, CollisionModel(kind), "hme")
            o = run_system_checks(b, CollisionModel(kind), "ohme")
            hd, od = h.yong.to_dict(), o.yong.to_dict()
            hd.pop("system"), od.pop("system")
            compat &= repr(hd) == repr(od) and h.min_im == o.min_im and h.identities == o.identities
        # space dispersion analogue lives in 1-D
        lin_o, _ = ohme_linearize(1.0, 1.0, b, CollisionModel("shakhov", tau=TAU).qbar(b).Qbar)
        compat &= all(pt.stable for pt in space_sweep(lin_o, None, np.logspace(-2, 2, 100)))

    rng = np.random.default_rng(7)
    analogues, idents = {}, {}
    for order in (3, 4, 5):
        analogues[order], idents[order] = _ohme_analogues(order, rng)
    failed = {m: [k for k, v in a.items() if not v] for m, a in analogues.items() if not all(a.values())}
    elapsed = time.perf_counter() - t0
    passed = counts_ok and compat and not failed and elapsed < 120
    detail = (
        f"counts {counts}, D=1 bit-compatible {compat}, failed analogues {failed}, "
        f"Dbar_O identity residuals {', '.join(f'M={m}: {r:.2e}' for m, r in idents.items())}"
    )
    if failed:
        detail += " -- shared contraction slots make Pp Pb^T != I for D=2, M>=4 (see notes/decisions.md)"
    return passed, report(capsys, 7, passed, detail, elapsed, 120)


def criterion_8(capsys=None):
    t0 = time.perf_counter()
    b = moment_basis(1, 3)
    lin = linearize(1.0, 1.0, b)
    agree = max_abs(linearize_grad_1d(1.0, 1.0, b) - lin.Mbar[0] @ lin.Dbar)
    witness, hme_worst = None, 0.0
    for f3 in np.linspace(0.0, 1.0, 201):
        s = MomentState.from_dict(b, {(3,): f3})
        grad_im = max_abs(np.linalg.eigvals(grad_flux_jacobian_1d(s)).imag)
        hme_im = max_abs(np.linalg.eigvals(assemble_A(s, 0)).imag)
        hme_worst = max(hme_worst, hme_im)
        if witness is None and grad_im > 1e-6 and hme_im <= 1e-10:
            witness = (f3, grad_im)
    elapsed = time.perf_counter() - t0
    passed = agree <= 1e-12 and witness is not None and hme_worst <= 1e-10
    detail = f"equilibrium agreement {agree:.2e}, first Grad complex pair at f3={witness[0]:.3f} (|Im| {witness[1]:.2e})" if witness else "no witness"
    return passed, report(capsys, 8, passed, detail + f", HME max |Im| {hme_worst:.2e}", elapsed)


def criterion_9(capsys=None):
    t0 = time.perf_counter()
    small = lemma_property_harness(trials=1000, n=8, seed=0, tol=1e-10)
    large = lemma_property_harness(trials=100, n=32, seed=1, tol=1e-10)
    elapsed = time.perf_counter() - t0
    passed = small.passed and large.passed
    detail = (
        f"n=8: {small.time_violations + small.space_violations} violations (min Im {small.min_imag:.2e}); "
        f"n=32: {large.time_violations + large.space_violations} violations (min Im {large.min_imag:.2e})"
    )
    return passed, report(capsys, 9, passed, detail, elapsed)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance(criterion, capsys):
    passed, line = criterion(capsys)
    assert passed, line


if __name__ == "__main__":
    results = [c()[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
