"""Newton-MR on a regularized sigmoid least-squares loss.

The loss is

    f(w) = (1/n) sum_i (sigma(<a_i, w>) - b_i)^2 + psi(w)

with ``psi`` one of none, ``0.5 ||w||^2`` or ``0.01 sum w_i^2 / (1 + w_i^2)``.
Two outer loops share one inner solver:

* ``npc``: MINRES stops at the first nonpositive-curvature detection and the
  returned residual becomes the search direction; Armijo backtracking on f.
* ``grad``: MINRES runs to its residual tolerance; Armijo backtracking on
  ``||grad f||^2``.

Oracle calls are counted as 1 per value, 1 per gradient and 2 per
Hessian-vector product.
"""

import csv
import enum
import io
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.special import expit

from .errors import LineSearchError, ValidationError
from .minres import MinresConfig, OutcomeKind, minres_solve
from .operators import SymmetricOperator
from .rng import make_rng

REGULARIZERS = {"none": 0.0, "l2": 0.5, "nonconvex": 0.01}
HVP_COST = 2


@dataclass
class NlsProblem:
    """Features ``(n, d)``, binary labels and a regularizer name."""

    features: np.ndarray
    labels: np.ndarray
    regularizer: str = "none"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValidationError(f"features must be a non-empty (n, d) array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValidationError(f"labels must have shape ({X.shape[0]},), got {y.shape}")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValidationError("labels must be 0 or 1")
        if self.regularizer not in REGULARIZERS:
            raise ValidationError(f"unknown regularizer {self.regularizer!r}; choose from {sorted(REGULARIZERS)}")
        self.features, self.labels = X, y

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def coef(self):
        return REGULARIZERS[self.regularizer]

    def _check(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.dim,):
            raise ValidationError(f"w must have shape ({self.dim},), got {w.shape}")
        return w


def _psi(w, prob):
    lam = prob.coef
    if prob.regularizer == "l2":
        return lam * float(w @ w)
    if prob.regularizer == "nonconvex":
        w2 = w * w
        return lam * float(np.sum(w2 / (1.0 + w2)))
    return 0.0


def _psi_grad(w, prob):
    lam = prob.coef
    if prob.regularizer == "l2":
        return 2.0 * lam * w
    if prob.regularizer == "nonconvex":
        return 2.0 * lam * w / (1.0 + w * w) ** 2
    return np.zeros_like(w)


def _psi_hess_diag(w, prob):
    lam = prob.coef
    if prob.regularizer == "l2":
        return np.full_like(w, 2.0 * lam)
    if prob.regularizer == "nonconvex":
        w2 = w * w
        return 2.0 * lam * (1.0 - 3.0 * w2) / (1.0 + w2) ** 3
    return np.zeros_like(w)


def nls_value(w, prob):
    w = prob._check(w)
    s = expit(prob.features @ w)
    return float(np.mean((s - prob.labels) ** 2)) + _psi(w, prob)


def nls_gradient(w, prob):
    w = prob._check(w)
    s = expit(prob.features @ w)
    ds = s * (1.0 - s)
    return (2.0 / prob.n) * (prob.features.T @ ((s - prob.labels) * ds)) + _psi_grad(w, prob)


def hessian_weights(w, prob):
    """Per-sample weights ``D`` in ``H = (2/n) X^T diag(D) X + psi''``."""
    s = expit(prob.features @ w)
    ds = s * (1.0 - s)
    d2s = ds * (1.0 - 2.0 * s)
    return ds * ds + (s - prob.labels) * d2s


def nls_hvp(w, v, prob):
    w = prob._check(w)
    v = prob._check(v)
    D = hessian_weights(w, prob)
    X = prob.features
    return (2.0 / prob.n) * (X.T @ (D * (X @ v))) + _psi_hess_diag(w, prob) * v


@dataclass
class OracleCounter:
    value: int = 0
    gradient: int = 0
    hvp: int = 0

    @property
    def total(self):
        return self.value + self.gradient + HVP_COST * self.hvp


class CountingObjective:
    """Value, gradient and Hessian operator of a problem, with call counts."""

    def __init__(self, prob):
        self.prob = prob
        self.counter = OracleCounter()

    def value(self, w):
        self.counter.value += 1
        return nls_value(w, self.prob)

    def gradient(self, w):
        self.counter.gradient += 1
        return nls_gradient(w, self.prob)

    def hessian(self, w):
        """Hessian at ``w`` as a :class:`SymmetricOperator` counting each product."""
        w = self.prob._check(w).copy()
        D = hessian_weights(w, self.prob)
        pdiag = _psi_hess_diag(w, self.prob)
        X = self.prob.features
        scale = 2.0 / self.prob.n

        def matvec(v):
            self.counter.hvp += 1
            return scale * (X.T @ (D * (X @ v))) + pdiag * v

        return SymmetricOperator(matvec, self.prob.dim)


@dataclass(frozen=True)
class LineSearchParams:
    rho: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 50
    initial_step: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0.0 < self.shrink < 1.0:
            raise ValidationError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.max_backtracks < 0:
            raise ValidationError(f"max_backtracks must be nonnegative, got {self.max_backtracks}")
        if self.initial_step <= 0.0:
            raise ValidationError(f"initial_step must be positive, got {self.initial_step}")


def armijo(f, w, p, slope, params=None, f0=None):
    """Backtracking line search for sufficient decrease.

    Parameters
    ----------
    f : callable
        Merit function of one vector argument.
    w, p : ndarray
        Current point and search direction.
    slope : float
        Directional derivative (or surrogate) of ``f`` at ``w`` along ``p``;
        must be negative.
    params : LineSearchParams, optional
    f0 : float, optional
        ``f(w)`` if already known; otherwise evaluated once (not counted in
        the returned evaluations).

    Returns
    -------
    step : float
        First ``eta`` in ``initial_step * shrink**j`` with
        ``f(w + eta p) <= f(w) + rho * eta * slope``.
    evaluations : int
        Number of trial evaluations of ``f``, the accepted one included.

    Raises
    ------
    ValueError
        If ``slope >= 0``.
    LineSearchError
        If no trial within ``max_backtracks`` halvings is accepted.
    """
    params = params or LineSearchParams()
    if not slope < 0.0:
        raise ValueError(f"line search needs a descent slope, got {slope}")
    if f0 is None:
        f0 = f(w)
    eta = params.initial_step
    for j in range(params.max_backtracks + 1):
        if f(w + eta * p) <= f0 + params.rho * eta * slope:
            return eta, j + 1
        eta *= params.shrink
    raise LineSearchError(f"no sufficient decrease after {params.max_backtracks} backtracks", params.max_backtracks + 1)


class Variant(enum.Enum):
    NPC = "npc"
    GRAD = "grad"


@dataclass
class NewtonConfig:
    grad_tol: float = 1e-10
    inner_rtol: float = 0.01
    maxouter: int = 500
    inner_maxit: int | None = None
    line_search: LineSearchParams = field(default_factory=LineSearchParams)

    def __post_init__(self):
        if self.grad_tol < 0:
            raise ValidationError(f"grad_tol must be nonnegative, got {self.grad_tol}")
        if not 0.0 < self.inner_rtol < 1.0:
            raise ValidationError(f"inner_rtol must lie in (0, 1), got {self.inner_rtol}")
        if self.maxouter < 0:
            raise ValidationError(f"maxouter must be nonnegative, got {self.maxouter}")


@dataclass
class OuterRecord:
    iteration: int
    f: float
    grad_norm: float
    step: float
    inner_iterations: int
    line_search_evals: int
    npc_used: bool
    oracle_calls: int
    cumulative_oracle_calls: int


@dataclass
class OptimizerTrace:
    variant: str
    regularizer: str
    records: list = field(default_factory=list)
    status: str = "running"
    iterates: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def npc_steps(self):
        return sum(r.npc_used for r in self.records)

    @property
    def final(self):
        return self.records[-1]

    def expected_calls(self, rec):
        """Per-iteration oracle calls predicted from the inner and line-search counts."""
        if self.variant == Variant.NPC.value:
            return 2 * rec.inner_iterations + rec.line_search_evals + 2
        return 2 * rec.inner_iterations + 2 * rec.line_search_evals + 2

    def to_csv(self):
        names = [f.name for f in fields(OuterRecord)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for rec in self.records:
            row = asdict(rec)
            writer.writerow([int(v) if isinstance(v, bool) else (repr(float(v)) if isinstance(v, float) else v) for v in (row[n] for n in names)])
        return buf.getvalue()


def newton_mr_run(prob, w0=None, variant="npc", config=None, keep_iterates=False):
    """Run one Newton-MR variant from ``w0`` (zeros by default).

    Each outer iteration evaluates ``f`` and ``grad f`` at the current point,
    solves ``H p = -grad f`` with MINRES, backtracks along ``p`` and steps.
    The ``npc`` variant stops the inner solve at the first NPC detection and
    uses the returned residual as ``p``; the ``grad`` variant solves to
    ``inner_rtol`` and backtracks on ``||grad f||^2`` with the decrease model
    ``2 eta rho <grad f, H p>``. Since the inner solve returns the residual
    ``r = -grad f - H p``, that inner product costs no extra product.

    Returns
    -------
    w : ndarray
    trace : OptimizerTrace
        ``status`` is ``"converged"``, ``"max_outer"`` or
        ``"line_search_failed"``.
    """
    variant = Variant(variant)
    config = config or NewtonConfig()
    obj = CountingObjective(prob)
    w = np.zeros(prob.dim) if w0 is None else prob._check(w0).astype(np.float64).copy()
    trace = OptimizerTrace(variant.value, prob.regularizer)
    inner_maxit = config.inner_maxit or prob.dim
    total = 0

    for it in range(config.maxouter + 1):
        before = obj.counter.total
        f = obj.value(w)
        g = obj.gradient(w)
        gnorm = float(np.linalg.norm(g))
        if keep_iterates:
            trace.iterates.append(w.copy())

        def finish(step, ns, nl, npc_used):
            nonlocal total
            calls = obj.counter.total - before
            total += calls
            trace.records.append(OuterRecord(it, f, gnorm, step, ns, nl, npc_used, calls, total))

        if gnorm <= config.grad_tol:
            finish(0.0, 0, 0, False)
            trace.status = "converged"
            return w, trace
        if it == config.maxouter:
            finish(0.0, 0, 0, False)
            trace.status = "max_outer"
            return w, trace

        H = obj.hessian(w)
        inner = MinresConfig(rtol=config.inner_rtol, maxit=inner_maxit, stop_on_npc=variant is Variant.NPC)
        out = minres_solve(H, -g, inner)
        ns = out.matvecs
        npc_used = variant is Variant.NPC and out.kind is OutcomeKind.NPC_DIRECTION
        p = out.npc_direction if npc_used else out.x

        try:
            if variant is Variant.NPC:
                step, nl = armijo(obj.value, w, p, float(g @ p), config.line_search, f0=f)
            else:
                # H p = -g - r, so <g, H p> needs no extra product
                slope = 2.0 * float(g @ (-g - out.residual))

                def merit(v):
                    obj.value(v)
                    gv = obj.gradient(v)
                    return float(gv @ gv)

                step, nl = armijo(merit, w, p, slope, config.line_search, f0=gnorm**2)
        except LineSearchError as exc:
            finish(0.0, ns, exc.evaluations, npc_used)
            trace.status = "line_search_failed"
            return w, trace
        finish(step, ns, nl, npc_used)
        w = w + step * p
    raise AssertionError("unreachable")


def make_blobs(n=500, d=20, seed=0, separation=1.0):
    """Two overlapping Gaussian blobs, labels 0 and 1 in equal proportion.

    Class centres sit at ``-/+ separation / 2`` along a random unit direction;
    features carry unit-variance isotropic noise.
    """
    rng = make_rng(seed)
    labels = np.zeros(n)
    labels[n // 2 :] = 1.0
    labels = labels[rng.permutation(n)]
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    centres = np.outer(labels - 0.5, u) * separation
    return centres + rng.standard_normal((n, d)), labels


def identical_prefix(trace_a, trace_b):
    """Length of the common prefix of iterates up to the first NPC step or step-size mismatch.

    Both traces must have been run with ``keep_iterates=True``. Returns
    ``(prefix, identical)``, where ``identical`` says whether the iterates in
    that prefix agree bit for bit.
    """
    n = min(len(trace_a.iterates), len(trace_b.iterates))
    prefix = 0
    for i in range(n):
        if not np.array_equal(trace_a.iterates[i], trace_b.iterates[i]):
            return prefix, False
        prefix = i + 1
        ra, rb = trace_a.records[i], trace_b.records[i]
        if ra.npc_used or rb.npc_used or ra.step != rb.step:
            break
    return prefix, True
