"""Invariant suites checked against the brute-force oracles.

Each suite takes a :class:`VerificationRun` (a diagnostic solve with every
vector kept) and records one entry per assertion in a :class:`SuiteReport`.
Equalities are tested at a relative tolerance against the natural magnitude
of the expression; strict inequalities ``value > 0`` pass when
``value > -SLACK * magnitude``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NumericalFailure
from .experiments import build_fig1_matrices, fig1_rhs
from .instances import instance_sweep, make_instance
from .minres import MinresConfig, PSDVerdict, certify_psd, minres_solve
from .oracles import (
    dk_expansion_oracle,
    krylov_lsq_reference,
    minors_closed_form,
    minors_direct,
    minors_recurrence,
)
from .rng import make_rng

SLACK = 1e-12
IDENTITY_RTOL = 1e-8
MINOR_RTOL = 1e-7
EXPANSION_RTOL = 1e-8
REFERENCE_RTOL = 1e-8
CURVATURE_RTOL = 1e-8
LAMBDA_ZERO_RTOL = 1e-14
MAX_RECORDED = 20


@dataclass
class Violation:
    check: str
    run: str
    k: int | None
    value: float
    bound: float
    detail: str = ""


@dataclass
class SuiteReport:
    name: str
    checks: int = 0
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    n_violations: int = 0

    @property
    def passed(self):
        return self.n_violations == 0

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None

    def expect(self, ok, check, run, k, value, bound, detail=""):
        self.checks += 1
        if not ok:
            self.n_violations += 1
            if len(self.violations) < MAX_RECORDED:
                self.violations.append(Violation(check, run, k, float(value), float(bound), detail))
        return ok

    def positive(self, check, run, k, value, magnitude, detail=""):
        """Assert ``value > 0`` up to the rounding slack."""
        bound = -SLACK * magnitude
        return self.expect(value > bound, check, run, k, value, bound, detail)

    def close(self, check, run, k, value, reference, magnitude, rtol, detail=""):
        err = abs(value - reference)
        return self.expect(err <= rtol * magnitude, check, run, k, err, rtol * magnitude, detail)

    def merge(self, other):
        self.checks += other.checks
        self.n_violations += other.n_violations
        room = MAX_RECORDED - len(self.violations)
        self.violations.extend(other.violations[: max(room, 0)])
        self.notes.extend(other.notes)
        return self

    def to_dict(self):
        first = self.first_violation
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "violations": self.n_violations,
            "first_violation": None if first is None else _jsonable(asdict(first)),
            "recorded": [_jsonable(asdict(v)) for v in self.violations],
            "notes": list(self.notes),
        }


def _jsonable(d):
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


@dataclass
class VerificationRun:
    """A full diagnostic solve plus what the oracles know about the system.

    ``x_star`` is a least-squares solution when ``b`` is in the range of
    ``A``, else ``None``. ``expected_grade`` is the grade predicted from the
    spectrum, when known.
    """

    name: str
    M: np.ndarray
    b: np.ndarray
    outcome: object
    x_star: np.ndarray | None = None
    expected_grade: int | None = None
    kind: str = "unknown"

    @property
    def history(self):
        return self.outcome.history

    @property
    def g(self):
        return self.history.completed

    @property
    def first_npc(self):
        return self.outcome.npc_iteration

    @property
    def last_clean(self):
        """Last iteration before the first NPC detection (``g`` if none)."""
        return self.g if self.first_npc is None else self.first_npc - 1

    @property
    def norm_A(self):
        return float(np.linalg.norm(self.M))


def verification_run(A, b, name="run", x_star=None, expected_grade=None, kind="unknown"):
    """Solve to breakdown with reorthogonalization, ignoring NPC detections."""
    config = MinresConfig(rtol=0.0, stop_on_npc=False, reorth=True, diagnostics=True)
    outcome = minres_solve(A, b, config)
    return VerificationRun(name, A.dense(), np.asarray(b, dtype=np.float64), outcome, x_star, expected_grade, kind)


def run_from_instance(inst):
    return verification_run(inst.A, inst.b, inst.name, inst.x_star, inst.grade, inst.kind)


def _n(v):
    return float(np.linalg.norm(v))


def identity_suite(run, report=None, rtol=IDENTITY_RTOL):
    """Orthogonality and residual identities for every k up to the grade.

    * ``<x_i, A r_k> = 0`` for ``1 <= i <= k``
    * ``<r_i, A r_k> = 0`` for ``i != k``
    * ``<r_{k-1}, A r_{k-1}> = -phi_{k-1}^2 c_{k-1} gamma1_k``
    * ``<r_k, b> = ||r_k||^2``
    """
    report = report or SuiteReport("identities")
    h, M, nA, g = run.history, run.M, run.norm_A, run.g
    X, R = h.x, h.r
    AR = [M @ r for r in R]
    for k in range(1, g + 1):
        for i in range(1, k + 1):
            mag = _n(X[i]) * nA * _n(R[k])
            report.close("identity.x_A_r", run.name, k, float(X[i] @ AR[k]), 0.0, mag, rtol, f"i={i}")
        for i in range(0, k):
            mag = _n(R[i]) * nA * _n(R[k])
            report.close("identity.r_A_r", run.name, k, float(R[i] @ AR[k]), 0.0, mag, rtol, f"i={i}")
        explicit = float(R[k - 1] @ AR[k - 1])
        scalar = -(h.phi[k - 1] ** 2) * h.c[k - 1] * h.gamma1[k]
        mag = nA * _n(R[k - 1]) ** 2
        report.close("identity.curvature", run.name, k, explicit, scalar, mag, rtol)
    for k in range(0, g + 1):
        mag = _n(R[k]) * _n(run.b)
        report.close("identity.r_b", run.name, k, float(R[k] @ run.b), _n(R[k]) ** 2, mag, rtol)
    return report


def tk_certificate_suite(run, report=None):
    """First NPC detection coincides with the first indefinite T_k.

    ``lambda_min(T_k)`` comes from the Jacobi oracle; values within
    ``LAMBDA_ZERO_RTOL * ||A||`` of zero count as zero.
    """
    report = report or SuiteReport("tk_certificate")
    zero = LAMBDA_ZERO_RTOL * run.norm_A
    first_lam = None
    for rec in run.outcome.trace:
        if rec.lambda_min_T <= zero:
            first_lam = rec.k
            break
    npc = run.first_npc
    a = -1 if npc is None else npc
    b = -1 if first_lam is None else first_lam
    report.expect(a == b, "tk_certificate.first_npc", run.name, npc, a, b, f"npc at {npc}, lambda_min<=0 at {first_lam}")
    return report


def psd_certificate_suite(instances, report=None):
    """``certify_psd`` on systems with known spectra.

    * PSD with ``b`` in the range: certified, no detection at all.
    * PSD singular with ``b`` outside the range: detection exactly at the
      grade, with vanishing curvature.
    * Indefinite: detection.
    """
    report = report or SuiteReport("psd_certificate")
    for inst in instances:
        cert = certify_psd(inst.A, inst.b)
        beta1_sq = float(inst.b @ inst.b)
        if inst.kind in ("pd", "psd_range"):
            ok = cert.verdict is PSDVerdict.CERTIFIED_PSD and cert.outcome.npc_iteration is None
            report.expect(ok, "psd_certificate.certified", inst.name, cert.iterations, 0, 0, cert.verdict.value)
        elif inst.kind == "psd_null":
            report.expect(cert.verdict is PSDVerdict.NPC_FOUND, "psd_certificate.null_detects", inst.name, cert.iterations, 0, 0, cert.verdict.value)
            k = cert.outcome.npc_iteration
            report.expect(k == inst.grade, "psd_certificate.at_grade", inst.name, k, -1 if k is None else k, inst.grade)
            if cert.verdict is PSDVerdict.NPC_FOUND:
                bound = CURVATURE_RTOL * beta1_sq
                report.expect(abs(cert.curvature) <= bound, "psd_certificate.zero_curvature", inst.name, k, abs(cert.curvature), bound)
                d = cert.direction
                explicit = float(d @ inst.A.dense() @ d)
                report.expect(abs(explicit) <= bound, "psd_certificate.zero_curvature_explicit", inst.name, k, abs(explicit), bound)
        else:
            report.expect(cert.verdict is PSDVerdict.NPC_FOUND, "psd_certificate.indefinite_detects", inst.name, cert.iterations, 0, 0, cert.verdict.value)
            if cert.direction is not None:
                d = cert.direction
                explicit = float(d @ inst.A.dense() @ d)
                mag = _n(inst.A.dense()) * float(d @ d)
                report.expect(explicit <= SLACK * mag, "psd_certificate.direction_curvature", inst.name, cert.iterations, explicit, SLACK * mag)
    return report


def monotonicity_suite(run, report=None):
    """Monotone quantities up to the first NPC detection.

    Checks ``m(x_k)`` decreasing, ``||x_k||`` and ``<x_k, b>`` increasing,
    ``<x_k, b> - <x_k, A x_k> > 0``, ``<x_k, r_k> > <x_{k-1}, r_k> >= 0``,
    ``<x_k, r_{k-1}> > <x_k, r_k> > 0`` and, if ``b`` is in the range, the
    energy error ``<e_k, A e_k>`` decreasing. ``phi_k`` is non-increasing on
    every iteration.
    """
    report = report or SuiteReport("monotonicity")
    h, M, nA, b = run.history, run.M, run.norm_A, run.b
    nb = _n(b)
    X, R = h.x, h.r

    def model(x):
        return 0.5 * float(x @ M @ x) - float(x @ b)

    def energy(x):
        e = run.x_star - x
        return float(e @ M @ e)

    for k in range(1, run.last_clean + 1):
        x, xp, r, rp = X[k], X[k - 1], R[k], R[k - 1]
        nx = _n(x)
        scale_m = nA * nx**2 + nb * nx
        report.positive("monotonicity.model_decreasing", run.name, k, model(xp) - model(x), scale_m)
        report.positive("monotonicity.norm_increasing", run.name, k, nx - _n(xp), nx)
        report.positive("monotonicity.xb_increasing", run.name, k, float(x @ b - xp @ b), nx * nb)
        report.positive("monotonicity.xb_minus_xAx", run.name, k, float(x @ b - x @ M @ x), scale_m)
        if k < run.g or _n(r) > 0:
            mag = nx * _n(r)
            report.positive("monotonicity.xr_positive", run.name, k, float(x @ r), mag)
            report.positive("monotonicity.xr_vs_prev", run.name, k, float(x @ r - xp @ r), mag)
            report.positive("monotonicity.prev_xr_nonneg", run.name, k, float(xp @ r), mag)
            report.positive("monotonicity.xr_prev_residual", run.name, k, float(x @ rp - x @ r), nx * _n(rp))
        if run.x_star is not None:
            ee = energy(x)
            report.positive("monotonicity.energy_error_decreasing", run.name, k, energy(xp) - ee, nA * _n(run.x_star - xp) ** 2)
    for k in range(1, run.g + 1):
        report.positive("monotonicity.phi_nonincreasing", run.name, k, h.phi[k - 1] - h.phi[k], h.phi[k - 1])
    return report


def determinant_suite(run, report=None, rtol=MINOR_RTOL):
    """Three evaluations of the trailing minors agree; all are positive before NPC.

    Compares direct determinants, the three-term recurrence and the closed
    form, and checks ``p(k,l) > 0`` and ``q(k,l) > 0``, for every ``k`` before
    the first detection. Agreement is relative to the size of the two terms
    the recurrence combines, which is the scale at which cancellation in a
    nearly singular minor shows up.
    """
    report = report or SuiteReport("determinants")
    K = run.last_clean
    if K < 1:
        return report
    h = run.history
    direct = minors_direct(h, K)
    rec = minors_recurrence(h, K)
    closed = minors_closed_form(h, K)
    report.notes.extend(f"{run.name}: {n}" for n in closed.notes)
    for (k, l), val in direct.p.items():
        mine = rec.p[(k, l)]
        j = k - l + 1
        mag = abs(h.alpha[j] * rec.P(k, l - 1)) + h.beta[j + 1] ** 2 * abs(rec.P(k, l - 2))
        report.close("determinants.p_recurrence", run.name, k, val, mine, max(mag, abs(val)), rtol, f"l={l}")
        report.positive("determinants.p_positive", run.name, k, mine, mag, f"l={l}")
    for (k, l), val in direct.q.items():
        mine = rec.q[(k, l)]
        j = k - l + 1
        mag = abs(h.delta2[j] * rec.Q(k, l - 1)) + abs(h.gamma2[j] * h.eps[j + 1] * rec.Q(k, l - 2))
        mag = max(mag, abs(val))
        report.close("determinants.q_recurrence", run.name, k, val, mine, mag, rtol, f"l={l}")
        if (k, l) in closed.q:
            report.close("determinants.q_closed_form", run.name, k, val, closed.q[(k, l)], mag, rtol, f"l={l}")
        report.positive("determinants.q_positive", run.name, k, mine, mag, f"l={l}")
    return report


def sign_suite(run, report=None):
    """Sign patterns of the recurrence scalars and vectors before NPC.

    Covers the scalar signs (alpha, beta, s, c, gamma1, gamma2, delta2, eps,
    tau), the inner products of ``v``, ``d``, ``r``, ``x`` and ``b`` that
    carry alternating signs, and the agreement of the ``d_k`` recurrence with
    its explicit expansion in the Lanczos vectors.
    """
    report = report or SuiteReport("signs")
    h, b, name = run.history, run.b, run.name
    K = run.last_clean
    g = run.g
    V, R, X, D = h.v, h.r, h.x, h.d
    nb = _n(b)
    c, tau, g1 = h.c, h.tau, h.gamma1
    table = minors_recurrence(h, K) if K >= 1 else None
    for k in range(1, K + 1):
        # at the grade only the sign conditions with a nondegenerate reflection apply
        if h.gamma2[k] == 0.0:
            continue
        at_grade = h.beta[k + 1] == 0.0
        report.positive("signs.alpha", name, k, h.alpha[k], abs(h.alpha[k]))
        report.positive("signs.beta", name, k, h.beta[k], h.beta[k])
        report.expect(0.0 <= h.s[k] < 1.0, "signs.s_range", name, k, h.s[k], 1.0)
        report.expect(0.0 < abs(c[k]) <= 1.0, "signs.c_range", name, k, c[k], 1.0)
        report.positive("signs.gamma2", name, k, h.gamma2[k], h.gamma2[k])
        if k >= 2:
            report.positive("signs.delta2", name, k, h.delta2[k], abs(h.delta2[k]))
        if k >= 3:
            report.positive("signs.eps", name, k, h.eps[k], abs(h.eps[k]))
        for i in range(0, k + 1):
            sgn = (-1) ** (k - i)
            report.positive("signs.c_gamma1", name, k, sgn * c[i] * g1[k], abs(c[i] * g1[k]), f"i={i}")
            report.positive("signs.c_tau", name, k, sgn * c[i] * tau[k], abs(c[i] * tau[k]), f"i={i}")
            report.positive("signs.c_c", name, k, sgn * c[i] * c[k], abs(c[i] * c[k]), f"i={i}")
        dk = D[k]
        ndk = _n(dk)
        for i in range(0, k):
            for j in range(0, i + 2):
                if at_grade and j == 0:
                    continue
                val = (-1) ** i * tau[k] * float(V[k - i] @ R[k - j])
                report.positive("signs.v_r", name, k, val, abs(tau[k]) * _n(R[k - j]), f"i={i} j={j}")
        for j in range(0, k):
            if at_grade and j == 0:
                continue
            report.positive("signs.d_r", name, k, tau[k] * float(dk @ R[k - j]), abs(tau[k]) * ndk * _n(R[k - j]), f"j={j}")
        for i in range(0, k):
            for j in range(0, i + 1):
                val = (-1) ** i * tau[k] * tau[k - j] * float(D[k - j] @ V[k - i])
                report.positive("signs.d_v", name, k, val, abs(tau[k] * tau[k - j]) * _n(D[k - j]), f"i={i} j={j}")
        for j in range(0, k):
            val = tau[k] * float(dk @ X[k - j])
            report.positive("signs.d_x", name, k, val, abs(tau[k]) * ndk * _n(X[k - j]), f"j={j}")
        report.positive("signs.d_b", name, k, tau[k] * float(dk @ b), abs(tau[k]) * ndk * nb)
        if k < g:
            expanded = dk_expansion_oracle(h, k, table)
            err = _n(expanded - dk)
            report.expect(err <= EXPANSION_RTOL * ndk, "signs.d_expansion", name, k, err, EXPANSION_RTOL * ndk)
    return report


def reference_suite(run, report=None, rtol=REFERENCE_RTOL):
    """Iterates match the explicit-Krylov least-squares oracle at every k.

    Meant for systems with ``b`` in the range of ``A``. When ``b`` is outside
    it, the least-squares problem just before the grade is nearly rank
    deficient and the normal equations lose all accuracy.
    """
    report = report or SuiteReport("reference")
    h = run.history
    for k in range(1, run.g + 1):
        if h.gamma2[k] == 0.0:
            # b outside the range: the minimizer over the last space is not unique
            report.notes.append(f"{run.name}: degenerate reflection at k={k}, skipped")
            continue
        try:
            ref = krylov_lsq_reference(run.M, run.b, k)
        except NumericalFailure:
            report.notes.append(f"{run.name}: reference singular at k={k}, skipped")
            continue
        x = h.x[k]
        err = _n(x - ref)
        report.expect(err <= rtol * _n(x), "reference.iterate", run.name, k, err, rtol * _n(x))
    return report


def fig1_suite(runs, report=None):
    """Qualitative properties of the three curvature test runs.

    ``runs`` maps ``"A"``, ``"B"``, ``"C"`` to solve outcomes on ``b = 1``.
    """
    report = report or SuiteReport("fig1")
    for name, out in runs.items():
        trace = out.trace
        first = trace.first_npc
        last = trace[-1].k
        beta1_sq = out.beta1**2
        report.expect(first is not None, "fig1.detects", name, first, 0, 0)
        if first is None:
            continue
        if name == "A":
            report.expect(first == last, "fig1.A_detects_last", name, first, first, last)
            row = trace[first - 1]
            bound = CURVATURE_RTOL * beta1_sq
            report.expect(abs(row.curvature_est) <= bound, "fig1.A_zero_curvature", name, first, abs(row.curvature_est), bound)
            report.expect(abs(row.curvature_explicit) <= bound, "fig1.A_zero_curvature_explicit", name, first, abs(row.curvature_explicit), bound)
        else:
            report.expect(first < last, "fig1.detects_early", name, first, first, last)
        prev = None
        for rec in trace:
            if rec.k >= first:
                break
            report.expect(rec.lambda_min_T > 0, "fig1.lambda_positive", name, rec.k, rec.lambda_min_T, 0.0)
            report.positive("fig1.x_dot_r", name, rec.k, rec.x_dot_r, rec.x_norm * rec.phi)
            if prev is None:
                prev = (0.0, 0.0, 0.0)
            m, nx, xb = prev
            scale = max(abs(m), abs(rec.m_x), rec.x_norm * math.sqrt(beta1_sq))
            report.positive("fig1.m_decreasing", name, rec.k, m - rec.m_x, scale)
            report.positive("fig1.norm_increasing", name, rec.k, rec.x_norm - nx, rec.x_norm)
            report.positive("fig1.xb_increasing", name, rec.k, rec.x_dot_b - xb, abs(rec.x_dot_b))
            prev = (rec.m_x, rec.x_norm, rec.x_dot_b)
        report.expect(trace[first - 1].lambda_min_T <= LAMBDA_ZERO_RTOL * out.norm_estimate, "fig1.lambda_at_detection", name, first, trace[first - 1].lambda_min_T, 0.0)
    return report


RUN_SUITES = {
    "identities": identity_suite,
    "tk_certificate": tk_certificate_suite,
    "monotonicity": monotonicity_suite,
    "determinants": determinant_suite,
    "signs": sign_suite,
}


def verify_all(seed=0, trials=50, d_range=(4, 16), reference_max_dim=12, psd_per_kind=20):
    """Run every suite and return a JSON-serializable report.

    ``trials`` random instances (cycling indefinite, positive definite, PSD
    with ``b`` in range, PSD with ``b`` outside) go through the per-run
    suites; the reference suite uses the solvable ones of dimension at most
    ``reference_max_dim``. The PSD certificate suite draws ``psd_per_kind``
    instances of each kind when ``trials > 0``. The three fixed curvature test
    matrices are always checked.
    """
    rng = make_rng(seed)
    suites = {name: SuiteReport(name) for name in ("solver", *RUN_SUITES, "reference", "psd_certificate", "fig1")}
    instances = instance_sweep(rng, trials, d_range)

    def attempt(name, fn, *args):
        try:
            result = fn(*args)
        except (NumericalFailure, FloatingPointError) as exc:
            suites["solver"].expect(False, "solver.failure", name, None, math.nan, math.nan, str(exc))
            return None
        suites["solver"].expect(True, "solver.failure", name, None, 0.0, 0.0)
        return result

    mats = build_fig1_matrices(seed)
    b = fig1_rhs()
    fig_runs = {}
    runs = []
    for name, A in mats.items():
        run = attempt(f"fig1-{name}", verification_run, A, b, f"fig1-{name}")
        if run is not None:
            fig_runs[name] = run.outcome
            runs.append(run)
    for inst in instances:
        run = attempt(inst.name, run_from_instance, inst)
        if run is not None:
            runs.append(run)

    for run in runs:
        for name, suite in RUN_SUITES.items():
            suite(run, suites[name])
        if run.M.shape[0] <= reference_max_dim and run.x_star is not None:
            reference_suite(run, suites["reference"])
    fig1_suite(fig_runs, suites["fig1"])
    if trials > 0:
        for kind in ("psd_range", "psd_null", "indefinite"):
            for t in range(psd_per_kind):
                d = int(rng.integers(d_range[0], d_range[1] + 1))
                inst = make_instance(rng, d, kind, name=f"psd{t:03d}-{kind}-d{d}")
                attempt(inst.name, psd_certificate_suite, [inst], suites["psd_certificate"])

    passed = all(s.passed for s in suites.values())
    failed = [s.name for s in suites.values() if not s.passed]
    return {
        "seed": seed,
        "trials": trials,
        "runs": len(runs),
        "passed": passed,
        "failed_suites": failed,
        "first_violation": next((s.to_dict()["first_violation"] for s in suites.values() if not s.passed), None),
        "suites": {name: s.to_dict() for name, s in suites.items()},
    }
