"""MINRES with built-in nonpositive-curvature (NPC) detection.

The iteration follows the classical Paige-Saunders recurrences: a Lanczos step,
one new 2x2 reflection of the tridiagonal, and short recurrences for the
iterate ``x_k``, the residual ``r_k`` and the direction ``d_k``. Before the
reflection is formed, the product ``c_{k-1} * gamma1_k`` is checked; when it
is nonnegative the previous residual ``r_{k-1}`` satisfies
``<r_{k-1}, A r_{k-1}> <= 0`` and is reported as an NPC direction.

Scalars are indexed by iteration: entry ``k`` of every history list is the
value at iteration ``k``, with index 0 holding the initialization
(``c_0 = -1``, ``s_0 = 0``, ``phi_0 = tau_0 = beta_1``).
"""

import csv
import enum
import io
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import NumericalFailure, ValidationError, ZeroRHSError
from .lanczos import assemble_tridiagonal, lanczos_init, lanczos_step
from .operators import DenseSymmetric, SymmetricOperator, as_vector

GAMMA2_RTOL = 1e-12
# at breakdown gamma1 carries rounding amplified by the Lanczos recursion;
# below this fraction of ||A|| it is read as an exactly singular T_k
SINGULAR_RTOL = 1e-8
# c * gamma1 within a few ulps of ||A|| below zero is a rounded zero
NPC_RTOL = 4.0 * float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class GivensPair:
    c: float
    s: float
    gamma2: float


def givens(gamma1, beta_next):
    """Reflection zeroing ``beta_next`` against ``gamma1``.

    Returns ``(c, s, gamma2)`` with ``gamma2 = hypot(gamma1, beta_next)``;
    when both are zero the degenerate pair ``(0, 1, 0)`` is returned.
    """
    gamma2 = math.hypot(gamma1, beta_next)
    if gamma2 > 0.0:
        return GivensPair(gamma1 / gamma2, beta_next / gamma2, gamma2)
    return GivensPair(0.0, 1.0, 0.0)


def npc_check(c_prev, gamma1, slack=0.0):
    """True iff ``c_{k-1} * gamma1_k >= -slack``."""
    return bool(c_prev * gamma1 >= -slack)


def curvature_estimate(phi_prev, c_prev, gamma1):
    """``<r_{k-1}, A r_{k-1}>`` from scalars alone: ``-phi_{k-1}^2 c_{k-1} gamma1_k``."""
    return -(phi_prev**2) * c_prev * gamma1


class OutcomeKind(enum.Enum):
    SOLUTION = "Solution"
    NPC_DIRECTION = "NPCDirection"
    MAX_ITERATIONS = "MaxIterations"


class StepEvent(enum.Enum):
    CONTINUE = "continue"
    NPC_DETECTED = "npc"
    SOLUTION = "solution"


@dataclass
class MinresConfig:
    """Solver settings.

    ``maxit=None`` means the operator dimension. ``diagnostics`` recomputes
    ``b - A x_k`` and ``<r_{k-1}, A r_{k-1}>`` with uncounted matvecs, tracks
    ``lambda_min(T_k)`` with the Jacobi oracle, and keeps every vector.
    ``npc_slack`` widens the detection test by an absolute amount on top of
    the built-in rounding allowance ``NPC_RTOL * ||A||``.
    """

    rtol: float = 1e-10
    maxit: int | None = None
    stop_on_npc: bool = True
    reorth: bool = False
    diagnostics: bool = False
    keep_vectors: bool = False
    npc_slack: float = 0.0

    def __post_init__(self):
        if self.rtol < 0:
            raise ValidationError(f"rtol must be nonnegative, got {self.rtol}")
        if self.maxit is not None and self.maxit < 1:
            raise ValidationError(f"maxit must be >= 1, got {self.maxit}")
        if self.npc_slack < 0:
            raise ValidationError(f"npc_slack must be nonnegative, got {self.npc_slack}")


@dataclass
class TraceRecord:
    k: int
    phi: float
    rel_residual: float
    curvature_est: float
    m_x: float
    x_norm: float
    x_dot_b: float
    x_dot_r: float
    npc_flag: bool
    lambda_min_T: float = math.nan
    curvature_explicit: float = math.nan
    residual_gap: float = math.nan


FIG1_COLUMNS = ("k", "lambda_min_T", "x_dot_r", "m_x", "x_norm", "x_dot_b", "rel_residual", "npc_flag")


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def npc_iterations(self):
        return [r.k for r in self.records if r.npc_flag]

    @property
    def first_npc(self):
        hits = self.npc_iterations
        return hits[0] if hits else None

    def to_csv(self, columns=None):
        """Serialize to CSV text, one row per iteration; floats use ``repr``."""
        columns = columns or [f.name for f in fields(TraceRecord)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in self.records:
            row = []
            for name in columns:
                val = getattr(rec, name)
                if isinstance(val, bool):
                    row.append(int(val))
                elif isinstance(val, float):
                    row.append(repr(float(val)))
                else:
                    row.append(val)
            writer.writerow(row)
        return buf.getvalue()


@dataclass
class SolverHistory:
    """Per-iteration scalars, and vectors when requested.

    Lists are indexed by iteration number. ``delta1``, ``eps`` and ``beta``
    run one index ahead (entry ``k+1`` is produced at iteration ``k``).
    Vector lists hold ``v[1..]``, ``x[0..]``, ``r[0..]`` and ``d[0..]`` with
    ``d[0] = 0``.
    """

    alpha: list
    beta: list
    c: list
    s: list
    gamma1: list
    gamma2: list
    delta1: list
    delta2: list
    eps: list
    tau: list
    phi: list
    npc: list
    v: list | None = None
    x: list | None = None
    r: list | None = None
    d: list | None = None

    @classmethod
    def start(cls, beta1, b, keep_vectors):
        nan = math.nan
        h = cls(
            alpha=[nan],
            beta=[nan, beta1],
            c=[-1.0],
            s=[0.0],
            gamma1=[nan],
            gamma2=[nan],
            delta1=[nan, 0.0],
            delta2=[nan],
            eps=[nan, 0.0],
            tau=[beta1],
            phi=[beta1],
            npc=[False],
        )
        if keep_vectors:
            zero = np.zeros_like(b)
            h.v = [zero, b / beta1]
            h.x = [zero]
            h.r = [b.copy()]
            h.d = [zero]
        return h

    @property
    def completed(self):
        """Number of iterations whose reflection was formed."""
        return len(self.c) - 1


@dataclass
class MinresState:
    k: int
    b: np.ndarray
    x: np.ndarray
    r: np.ndarray
    d_prev: np.ndarray
    d_prev2: np.ndarray
    lanczos: object
    c: float
    s: float
    phi: float
    tau: float
    delta1: float
    eps: float
    beta1: float
    history: SolverHistory
    npc_direction: np.ndarray | None = None
    npc_iteration: int | None = None


@dataclass
class SolveOutcome:
    kind: OutcomeKind
    x: np.ndarray
    iterations: int
    trace: IterationTrace
    npc_direction: np.ndarray | None = None
    npc_iteration: int | None = None
    residual_norm: float = math.nan
    beta1: float = math.nan
    norm_estimate: float = math.nan
    matvecs: int = 0
    history: SolverHistory | None = None
    residual: np.ndarray | None = None

    @property
    def relative_residual(self):
        return self.residual_norm / self.beta1


def as_operator(A):
    """Accept a :class:`SymmetricOperator` or a square array."""
    if isinstance(A, SymmetricOperator):
        return A
    return DenseSymmetric.from_matrix(A)


def minres_init(A, b, config):
    keep = config.keep_vectors or config.diagnostics
    lz, beta1 = lanczos_init(A, b, reorth=config.reorth, keep_basis=keep)
    zero = np.zeros_like(b)
    return MinresState(
        k=1,
        b=b,
        x=zero,
        r=b.copy(),
        d_prev=zero,
        d_prev2=zero,
        lanczos=lz,
        c=-1.0,
        s=0.0,
        phi=beta1,
        tau=beta1,
        delta1=0.0,
        eps=0.0,
        beta1=beta1,
        history=SolverHistory.start(beta1, b, keep),
    )


def _record(state, A, config, k, curvature, npc, x, r, phi, diag_r_prev=None):
    b = state.b
    xb = float(x @ b)
    xr = float(x @ r)
    rec = TraceRecord(
        k=k,
        phi=phi,
        rel_residual=phi / state.beta1,
        curvature_est=curvature,
        m_x=-0.5 * (xb + xr),
        x_norm=float(np.linalg.norm(x)),
        x_dot_b=xb,
        x_dot_r=xr,
        npc_flag=npc,
    )
    if config.diagnostics:
        Ax = A.apply(x, counted=False)
        rec.m_x = 0.5 * float(x @ Ax) - xb
        rec.residual_gap = float(np.linalg.norm(r - (b - Ax)))
        if diag_r_prev is not None:
            rec.curvature_explicit = float(diag_r_prev @ A.apply(diag_r_prev, counted=False))
        from .oracles import jacobi_eigen

        T = assemble_tridiagonal(state.lanczos).matrix()
        rec.lambda_min_T = float(jacobi_eigen(T).eigenvalues[0])
    return rec


def minres_step(state, A, config, trace):
    """Run iteration ``state.k`` and return the resulting :class:`StepEvent`.

    The event is ``NPC_DETECTED`` only when the NPC condition holds and
    ``config.stop_on_npc`` is set; otherwise detections are recorded in the
    trace and the iteration proceeds.
    """
    k = state.k
    h = state.history
    lz = state.lanczos
    v_k = lz.v_curr
    r_prev = state.r
    phi_prev = state.phi

    alpha, beta_next, _ = lanczos_step(lz, A)
    c_prev, s_prev = state.c, state.s
    delta1 = state.delta1
    delta2 = c_prev * delta1 + s_prev * alpha
    gamma1 = s_prev * delta1 - c_prev * alpha
    eps_next = s_prev * beta_next
    delta1_next = -c_prev * beta_next
    gamma2_tol = GAMMA2_RTOL * lz.norm_est
    if beta_next == 0.0 and abs(gamma1) <= SINGULAR_RTOL * lz.norm_est:
        # snap so the degenerate branch and the NPC test agree
        gamma1 = 0.0
    for val in (alpha, beta_next, delta2, gamma1):
        if not math.isfinite(val):
            raise NumericalFailure(f"non-finite recurrence scalar at iteration {k}")

    h.alpha.append(alpha)
    h.beta.append(beta_next)
    h.delta2.append(delta2)
    h.gamma1.append(gamma1)
    h.eps.append(eps_next)
    h.delta1.append(delta1_next)
    if h.v is not None and beta_next > 0.0:
        h.v.append(lz.v_curr)

    npc = npc_check(c_prev, gamma1, config.npc_slack + NPC_RTOL * lz.norm_est)
    h.npc.append(npc)
    curvature = curvature_estimate(phi_prev, c_prev, gamma1)
    diag_r_prev = r_prev if config.diagnostics else None
    if npc and state.npc_direction is None:
        state.npc_direction = r_prev.copy()
        state.npc_iteration = k
    if npc and config.stop_on_npc:
        trace.records.append(_record(state, A, config, k, curvature, True, state.x, r_prev, phi_prev, diag_r_prev))
        return StepEvent.NPC_DETECTED

    g = givens(gamma1, beta_next)
    if g.gamma2 > gamma2_tol:
        c, s, gamma2 = g.c, g.s, g.gamma2
        tau = c * phi_prev
        phi = s * phi_prev
        d = (v_k - delta2 * state.d_prev - state.eps * state.d_prev2) / gamma2
        x = state.x + tau * d
        if beta_next != 0.0:
            r = s * s * r_prev - phi * c * lz.v_curr
            event = StepEvent.CONTINUE
        else:
            r = np.zeros_like(r_prev)
            event = StepEvent.SOLUTION
    else:
        c, s, gamma2, tau, phi = 0.0, 1.0, 0.0, 0.0, phi_prev
        d = state.d_prev
        x, r = state.x, r_prev
        event = StepEvent.SOLUTION
    if phi < 0 or not math.isfinite(phi):
        raise NumericalFailure(f"invalid residual norm {phi} at iteration {k}")

    h.c.append(c)
    h.s.append(s)
    h.gamma2.append(gamma2)
    h.tau.append(tau)
    h.phi.append(phi)
    if h.x is not None:
        h.x.append(x)
        h.r.append(r)
        h.d.append(d if gamma2 > 0 else np.zeros_like(d))

    if gamma2 > 0:
        state.d_prev2, state.d_prev = state.d_prev, d
    state.x, state.r = x, r
    state.c, state.s, state.phi, state.tau = c, s, phi, tau
    state.delta1, state.eps = delta1_next, eps_next
    state.k = k + 1
    trace.records.append(_record(state, A, config, k, curvature, npc, x, r, phi, diag_r_prev))
    if event is StepEvent.CONTINUE and phi <= config.rtol * state.beta1:
        event = StepEvent.SOLUTION
    return event


def minres_solve(A, b, config=None, x0=None, **kwargs):
    """Solve ``min ||A x - b||`` for symmetric ``A``, watching for NPC directions.

    Parameters
    ----------
    A : SymmetricOperator or array_like
    b : array_like
    config : MinresConfig, optional
        Keyword arguments override individual fields.
    x0 : array_like, optional
        Initial guess. The shifted system ``A y = b - A x0`` is solved from
        zero and ``x0`` is added back.

    Returns
    -------
    SolveOutcome
        ``kind`` is ``NPC_DIRECTION`` (with ``x = x_{k-1}`` and
        ``npc_direction = r_{k-1}``), ``SOLUTION`` or ``MAX_ITERATIONS``.
    """
    if config is None:
        config = MinresConfig(**kwargs)
    elif kwargs:
        config = MinresConfig(**{**config.__dict__, **kwargs})
    A = as_operator(A)
    b = as_vector(b, "b")
    if b.shape[0] != A.dim:
        from .errors import DimensionError

        raise DimensionError(f"b has length {b.shape[0]}, operator has dim {A.dim}")
    start_count = A.matvec_count
    if x0 is not None:
        x0 = as_vector(x0, "x0")
        b = b - A.apply(x0)
    if not np.any(b):
        raise ZeroRHSError("right-hand side is zero; x = 0 is optimal")

    maxit = A.dim if config.maxit is None else config.maxit
    state = minres_init(A, b, config)
    trace = IterationTrace()
    kind = OutcomeKind.MAX_ITERATIONS
    while state.k <= maxit:
        event = minres_step(state, A, config, trace)
        if event is StepEvent.NPC_DETECTED:
            kind = OutcomeKind.NPC_DIRECTION
            break
        if event is StepEvent.SOLUTION:
            kind = OutcomeKind.SOLUTION
            break

    x = state.x if x0 is None else state.x + x0
    return SolveOutcome(
        kind=kind,
        x=x,
        iterations=len(trace),
        trace=trace,
        npc_direction=state.npc_direction,
        npc_iteration=state.npc_iteration,
        residual_norm=state.phi,
        beta1=state.beta1,
        norm_estimate=state.lanczos.norm_est,
        matvecs=A.matvec_count - start_count,
        history=state.history,
        residual=state.r,
    )


class PSDVerdict(enum.Enum):
    CERTIFIED_PSD = "certified_psd"
    NPC_FOUND = "npc_found"
    INCONCLUSIVE = "inconclusive"


@dataclass
class PSDCertificate:
    verdict: PSDVerdict
    iterations: int
    direction: np.ndarray | None = None
    curvature: float = math.nan
    outcome: SolveOutcome | None = None


def certify_psd(A, b, config=None, **kwargs):
    """Run to breakdown and report whether an NPC direction ever appeared.

    For the certificate to mean ``A`` is positive semidefinite, ``b`` must
    have a nonzero component along every eigenspace of ``A``; drawing ``b``
    from a rotation-invariant distribution (e.g. a standard normal vector)
    achieves this with probability one.
    """
    base = dict(reorth=True)
    if config is not None:
        base.update(config.__dict__)
    base.update(kwargs)
    base.update(rtol=0.0, stop_on_npc=True)
    outcome = minres_solve(A, b, MinresConfig(**base))
    if outcome.kind is OutcomeKind.NPC_DIRECTION:
        rec = outcome.trace[-1]
        return PSDCertificate(PSDVerdict.NPC_FOUND, outcome.iterations, outcome.npc_direction, rec.curvature_est, outcome)
    if outcome.kind is OutcomeKind.SOLUTION:
        return PSDCertificate(PSDVerdict.CERTIFIED_PSD, outcome.iterations, outcome=outcome)
    return PSDCertificate(PSDVerdict.INCONCLUSIVE, outcome.iterations, outcome=outcome)
