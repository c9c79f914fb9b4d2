"""Acceptance criteria 1-10, each at its stated tolerance and time budget."""

import time

import numpy as np
import pytest

from minres_npc.checks import (
    SuiteReport,
    determinant_suite,
    fig1_suite,
    identity_suite,
    monotonicity_suite,
    psd_certificate_suite,
    reference_suite,
    run_from_instance,
    sign_suite,
    tk_certificate_suite,
    verification_run,
)
from minres_npc.experiments import build_fig1_matrices, fig1_rhs, run_fig1, run_newton_experiment
from minres_npc.instances import instance_sweep, make_instance
from minres_npc.newton import REGULARIZERS, NlsProblem, make_blobs, nls_gradient, nls_hvp, nls_value
from minres_npc.rng import make_rng

SEED = 0
TRIALS = 50


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    runs = [run_from_instance(inst) for inst in instance_sweep(SEED, TRIALS, (4, 16))]
    return runs, time.perf_counter() - t0


def _run_suite(runs, suite, name):
    report = SuiteReport(name)
    for run in runs:
        suite(run, report)
    return report


def _assert_clean(report):
    assert report.passed, f"{report.n_violations} violations, first: {report.first_violation}"


def test_criterion_01_identities(sweep):
    """1. recurrence identities on 50 reorthogonalized runs, 1e-8 scaled, under 10 s"""
    runs, build = sweep
    t0 = time.perf_counter()
    report = _run_suite(runs, identity_suite, "identities")
    elapsed = build + time.perf_counter() - t0
    assert len(runs) == TRIALS
    _assert_clean(report)
    assert elapsed < 10.0, f"took {elapsed:.2f} s"


def test_criterion_02_tk_certificate(sweep):
    """2. first NPC detection coincides with first lambda_min(T_k) <= 0"""
    runs, _ = sweep
    report = _run_suite(runs, tk_certificate_suite, "tk_certificate")
    _assert_clean(report)


def test_criterion_03_psd_certificate():
    """3. PSD certificate on 20 PSD-in-range, 20 PSD-null and 20 indefinite systems"""
    rng = make_rng(SEED + 1)
    instances = []
    for kind in ("psd_range", "psd_null", "indefinite"):
        for t in range(20):
            d = int(rng.integers(4, 17))
            instances.append(make_instance(rng, d, kind, name=f"{kind}-{t}"))
    report = psd_certificate_suite(instances)
    _assert_clean(report)


def test_criterion_04_monotonicity(sweep):
    """4. monotone quantities before the first NPC detection, slack 1e-12 scaled"""
    runs, _ = sweep
    mats = build_fig1_matrices(SEED)
    fig = [verification_run(A, fig1_rhs(), f"fig1-{name}") for name, A in mats.items()]
    report = _run_suite(runs + fig, monotonicity_suite, "monotonicity")
    _assert_clean(report)


def test_criterion_05_determinants(sweep):
    """5. direct, recurrence and closed-form minors agree to 1e-7; q(k,l) > 0 before NPC"""
    runs, _ = sweep
    report = _run_suite(runs, determinant_suite, "determinants")
    _assert_clean(report)


def test_criterion_06_signs(sweep):
    """6. sign conditions and the d_k expansion (1e-8) hold across the sweep"""
    runs, _ = sweep
    report = _run_suite(runs, sign_suite, "signs")
    _assert_clean(report)


def test_criterion_07_reference(sweep):
    """7. iterates match the explicit Krylov least-squares oracle to 1e-8 ||x_k||, d <= 12"""
    runs, _ = sweep
    eligible = [r for r in runs if r.M.shape[0] <= 12 and r.x_star is not None]
    assert len(eligible) >= 10
    report = _run_suite(eligible, reference_suite, "reference")
    _assert_clean(report)


def test_criterion_08_fig1():
    """8. d = 20 curvature runs: A detects at the end, B and C early, monotone columns, under 5 s"""
    t0 = time.perf_counter()
    runs = run_fig1(SEED)
    report = fig1_suite(runs)
    elapsed = time.perf_counter() - t0
    _assert_clean(report)
    last = {name: out.trace[-1].k for name, out in runs.items()}
    assert runs["A"].npc_iteration == last["A"]
    assert runs["B"].npc_iteration < last["B"]
    assert runs["C"].npc_iteration < last["C"]
    assert elapsed < 5.0, f"took {elapsed:.2f} s"


def test_criterion_09_newton():
    """9. Newton-MR on n = 500, d = 20: convergence, NPC steps, exact oracle-call formulas, under 60 s"""
    t0 = time.perf_counter()
    results = run_newton_experiment({"seed": SEED, "n": 500, "d": 20})
    elapsed = time.perf_counter() - t0
    by_name = {rec.experiment: (rec, trace) for rec, trace in results}

    for variant in ("npc", "grad"):
        rec, _ = by_name[f"newton-l2-{variant}"]
        assert rec.summary["final_grad_norm"] <= 1e-10, rec.summary

    rec, trace = by_name["newton-nonconvex-npc"]
    f = trace.column("f")
    assert np.all(np.diff(f) <= 0.0)
    assert trace.npc_steps >= 1
    assert rec.summary["final_grad_norm"] <= 1e-10, rec.summary

    for rec, trace in results:
        for row in trace.records:
            assert row.oracle_calls == trace.expected_calls(row), (rec.experiment, row)
        assert rec.summary["oracle_formula_holds"]
    assert elapsed < 60.0, f"took {elapsed:.2f} s"


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.mark.parametrize("regularizer", sorted(REGULARIZERS))
def test_criterion_10_finite_differences(regularizer):
    """10. gradient and Hessian-vector products match central differences (1e-5 / 1e-4)"""
    rng = make_rng(SEED + 10)
    for t in range(20):
        X, y = make_blobs(60, 8, seed=int(rng.integers(1 << 31)))
        prob = NlsProblem(X, y, regularizer)
        w = rng.standard_normal(8)
        v = rng.standard_normal(8)

        h = 1e-6
        eye = np.eye(8)
        fd_grad = np.array([(nls_value(w + h * e, prob) - nls_value(w - h * e, prob)) / (2 * h) for e in eye])
        assert _rel(fd_grad, nls_gradient(w, prob)) <= 1e-5, t

        h = 1e-5
        fd_hvp = (nls_gradient(w + h * v, prob) - nls_gradient(w - h * v, prob)) / (2 * h)
        assert _rel(fd_hvp, nls_hvp(w, v, prob)) <= 1e-4, t
