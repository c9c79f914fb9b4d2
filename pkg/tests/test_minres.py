import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minres_npc.errors import DimensionError, ValidationError, ZeroRHSError
from minres_npc.experiments import build_fig1_matrices, fig1_rhs
from minres_npc.instances import make_instance
from minres_npc.minres import (
    FIG1_COLUMNS,
    MinresConfig,
    OutcomeKind,
    PSDVerdict,
    certify_psd,
    curvature_estimate,
    givens,
    minres_init,
    minres_solve,
    minres_step,
    npc_check,
    IterationTrace,
    StepEvent,
)
from minres_npc.operators import DenseSymmetric, SymmetricOperator, diagonal, identity
from minres_npc.oracles import krylov_lsq_reference
from minres_npc.rng import make_rng


def test_givens_examples():
    g = givens(3.0, 4.0)
    assert (g.c, g.s, g.gamma2) == (0.6, 0.8, 5.0)
    assert tuple(givens(1.0, 0.0).__dict__.values()) == (1.0, 0.0, 1.0)
    assert tuple(givens(0.0, 0.0).__dict__.values()) == (0.0, 1.0, 0.0)


def test_npc_check_examples():
    assert npc_check(-1.0, -1.0)
    assert not npc_check(-1.0, 1.0)
    assert npc_check(-1.0, 0.0)
    assert npc_check(-1.0, 1e-20, slack=1e-19)


def test_curvature_estimate_examples(rng):
    b = rng.standard_normal(4)
    phi = np.linalg.norm(b)
    assert curvature_estimate(phi, -1.0, -1.0) == pytest.approx(-(b @ b))
    assert curvature_estimate(phi, -1.0, 1.0) == pytest.approx(b @ b)


def test_negative_identity_returns_rhs(rng):
    b = rng.standard_normal(5)
    out = minres_solve(-np.eye(5), b)
    assert out.kind is OutcomeKind.NPC_DIRECTION
    assert out.npc_iteration == 1
    np.testing.assert_array_equal(out.npc_direction, b)
    np.testing.assert_array_equal(out.x, np.zeros(5))
    assert b @ (-b) <= 0


def test_zero_curvature_boundary():
    b = np.ones(2) / np.sqrt(2.0)
    out = minres_solve(diagonal([1.0, -1.0]), b)
    assert out.kind is OutcomeKind.NPC_DIRECTION and out.npc_iteration == 1
    assert abs(out.trace[0].curvature_est) <= 1e-15


def test_identity_one_step():
    A = identity(3)
    b = np.array([1.0, 0.0, 0.0])
    config = MinresConfig()
    state = minres_init(A, b, config)
    trace = IterationTrace()
    assert minres_step(state, A, config, trace) is StepEvent.SOLUTION
    np.testing.assert_array_equal(state.x, b)
    assert state.phi == 0.0


def test_scaled_identity(rng):
    b = rng.standard_normal(4)
    out = minres_solve(2.0 * np.eye(4), b)
    assert out.iterations == 1
    np.testing.assert_allclose(out.x, b / 2.0, rtol=1e-15)


def test_pd_system_solves(rng):
    inst = make_instance(rng, 10, "pd")
    out = minres_solve(inst.A, inst.b, rtol=1e-10)
    assert out.kind is OutcomeKind.SOLUTION
    assert out.npc_direction is None
    true_res = np.linalg.norm(inst.b - inst.A.dense() @ out.x)
    assert true_res <= 1e-10 * np.linalg.norm(inst.b) * 1.01
    np.testing.assert_allclose(out.x, np.linalg.solve(inst.A.dense(), inst.b), rtol=1e-8)


def test_iterates_match_reference(rng):
    inst = make_instance(rng, 6, "indefinite")
    out = minres_solve(inst.A, inst.b, rtol=0.0, stop_on_npc=False, reorth=True, keep_vectors=True)
    for k in range(1, out.history.completed + 1):
        ref = krylov_lsq_reference(inst.A, inst.b, k)
        assert np.linalg.norm(out.history.x[k] - ref) <= 1e-9 * np.linalg.norm(ref)


def test_curvature_estimate_matches_explicit(rng):
    inst = make_instance(rng, 7, "indefinite")
    out = minres_solve(inst.A, inst.b, rtol=0.0, stop_on_npc=False, reorth=True, diagnostics=True)
    for rec in out.trace:
        assert rec.curvature_est == pytest.approx(rec.curvature_explicit, rel=1e-8, abs=1e-12 * out.beta1**2)


def test_max_iterations_and_x0(rng):
    inst = make_instance(rng, 9, "pd")
    out = minres_solve(inst.A, inst.b, maxit=2)
    assert out.kind is OutcomeKind.MAX_ITERATIONS and out.iterations == 2
    x0 = rng.standard_normal(9)
    out = minres_solve(inst.A, inst.b, x0=x0)
    np.testing.assert_allclose(inst.A.dense() @ out.x, inst.b, atol=1e-8)


def test_matvec_budget(rng):
    inst = make_instance(rng, 8, "pd")
    out = minres_solve(inst.A, inst.b, rtol=0.0, diagnostics=True)
    assert out.matvecs == out.iterations


def test_input_errors():
    with pytest.raises(ZeroRHSError):
        minres_solve(identity(2), np.zeros(2))
    with pytest.raises(DimensionError):
        minres_solve(identity(2), np.ones(3))
    with pytest.raises(ValidationError):
        MinresConfig(rtol=-1.0)
    with pytest.raises(ValidationError):
        MinresConfig(maxit=0)
    with pytest.raises(ZeroRHSError):
        minres_solve(identity(2), np.ones(2), x0=np.ones(2))


def test_matrix_free_operator(rng):
    d = np.array([1.0, 2.0, 3.0])
    A = SymmetricOperator(lambda v: d * v, 3)
    out = minres_solve(A, np.ones(3))
    np.testing.assert_allclose(out.x, 1.0 / d, rtol=1e-12)


def test_certify_psd_examples(rng):
    cert = certify_psd(identity(4), rng.standard_normal(4))
    assert cert.verdict is PSDVerdict.CERTIFIED_PSD and cert.iterations == 1
    cert = certify_psd(diagonal([1.0, -1.0]), np.array([0.3, -1.7]))
    assert cert.verdict is PSDVerdict.NPC_FOUND and cert.iterations <= 2
    assert cert.direction @ diagonal([1.0, -1.0]).dense() @ cert.direction <= 0
    cert = certify_psd(identity(4), np.ones(4), maxit=1, reorth=False)
    assert cert.verdict is PSDVerdict.CERTIFIED_PSD


def test_certify_psd_inconclusive(rng):
    inst = make_instance(rng, 8, "pd")
    assert certify_psd(inst.A, inst.b, maxit=3).verdict is PSDVerdict.INCONCLUSIVE


def test_fig1_matrices():
    mats = build_fig1_matrices(0)
    b = fig1_rhs()
    top = np.logspace(0, 3, 19)
    from minres_npc.oracles import jacobi_eigen

    lam = {k: jacobi_eigen(A).eigenvalues for k, A in mats.items()}
    np.testing.assert_allclose(lam["A"], np.concatenate([[0.0], top]), atol=1e-8 * 1e3)
    np.testing.assert_allclose(lam["B"], np.concatenate([[-1.0], top]), atol=1e-8 * 1e3)
    np.testing.assert_allclose(lam["C"][:2], [-10.0, -1.0], atol=1e-8 * 1e3)
    out_a = minres_solve(mats["A"], b, rtol=0.0, stop_on_npc=False, reorth=True)
    assert out_a.npc_iteration == out_a.iterations
    assert abs(out_a.trace[-1].curvature_est) <= 1e-8 * out_a.beta1**2
    cert = certify_psd(mats["C"], b)
    assert cert.verdict is PSDVerdict.NPC_FOUND and cert.iterations < 20


def test_trace_csv_has_plain_floats():
    out = minres_solve(diagonal([1.0, 2.0, -3.0]), np.ones(3), rtol=0.0, stop_on_npc=False, diagnostics=True)
    text = out.trace.to_csv(FIG1_COLUMNS)
    assert "np." not in text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == list(FIG1_COLUMNS)
    assert [int(r["k"]) for r in rows] == list(range(1, len(rows) + 1))
    assert {r["npc_flag"] for r in rows} <= {"0", "1"}
    assert out.trace.npc_iterations == [int(r["k"]) for r in rows if r["npc_flag"] == "1"]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 16), kind=st.sampled_from(["indefinite", "pd", "psd_range", "psd_null"]))
def test_npc_direction_is_descent_with_nonpositive_curvature(seed, d, kind):
    inst = make_instance(make_rng(seed), d, kind)
    out = minres_solve(inst.A, inst.b, rtol=0.0, reorth=True)
    M = inst.A.dense()
    if out.kind is OutcomeKind.NPC_DIRECTION:
        p = out.npc_direction
        scale = np.linalg.norm(M) * (p @ p)
        assert p @ M @ p <= 1e-8 * scale
        # <p, -b> = -||p||^2 makes p a descent direction for m(x) at x_{k-1}
        assert p @ inst.b == pytest.approx(p @ p, rel=1e-8)
    else:
        assert kind in ("pd", "psd_range")
        res = np.linalg.norm(inst.b - M @ out.x)
        assert res <= 1e-7 * np.linalg.norm(inst.b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 16))
def test_residual_norm_recurrence_is_monotone(seed, d):
    inst = make_instance(make_rng(seed), d, "indefinite")
    out = minres_solve(inst.A, inst.b, rtol=0.0, stop_on_npc=False, reorth=True, diagnostics=True)
    phi = out.trace.column("phi")
    assert np.all(np.diff(phi) <= 1e-12 * out.beta1)
    gaps = out.trace.column("residual_gap")
    assert np.all(gaps <= 1e-8 * out.beta1)
