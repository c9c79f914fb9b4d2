"""scikit-learn style wrappers.

:class:`MinresNPC` fits a symmetric system and exposes the solution and any
NPC direction as fitted attributes. :class:`NewtonMRClassifier` fits the
sigmoid least-squares model with either Newton-MR variant.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y
from scipy.special import expit

from .minres import MinresConfig, OutcomeKind, minres_solve
from .newton import LineSearchParams, NewtonConfig, NlsProblem, newton_mr_run
from .operators import DenseSymmetric, SymmetricOperator
from .validation import check_binary_labels, check_positive, check_rhs, check_square_symmetric


class MinresNPC(BaseEstimator):
    """MINRES solver that reports nonpositive curvature.

    Parameters
    ----------
    rtol : float
        Stop once ``||r_k|| <= rtol * ||b||``.
    maxit : int or None
        Iteration cap; ``None`` means the dimension.
    stop_on_npc : bool
        Return at the first NPC detection instead of continuing.
    reorth : bool
        Fully reorthogonalize the Lanczos basis.

    Attributes
    ----------
    x_ : ndarray
        Final iterate (``x_{k-1}`` when stopped by an NPC detection).
    outcome_ : str
        ``"Solution"``, ``"NPCDirection"`` or ``"MaxIterations"``.
    npc_direction_ : ndarray or None
        First residual found with ``<r, A r> <= 0``.
    n_iter_ : int
    trace_ : IterationTrace
    """

    def __init__(self, rtol=1e-10, maxit=None, stop_on_npc=True, reorth=False):
        self.rtol = rtol
        self.maxit = maxit
        self.stop_on_npc = stop_on_npc
        self.reorth = reorth

    def fit(self, A, b):
        check_positive(self.rtol, "rtol", allow_zero=True)
        if not isinstance(A, SymmetricOperator):
            A = DenseSymmetric(check_square_symmetric(A))
        b = check_rhs(b, A.dim)
        config = MinresConfig(rtol=self.rtol, maxit=self.maxit, stop_on_npc=self.stop_on_npc, reorth=self.reorth)
        out = minres_solve(A, b, config)
        self.x_ = out.x
        self.outcome_ = out.kind.value
        self.npc_direction_ = out.npc_direction
        self.n_iter_ = out.iterations
        self.trace_ = out.trace
        self.relative_residual_ = out.relative_residual
        self.n_features_in_ = A.dim
        return self

    @property
    def found_npc_(self):
        check_is_fitted(self, "x_")
        return self.npc_direction_ is not None

    def predict(self, A=None):
        """Return the fitted solution (``A`` is accepted for API symmetry)."""
        check_is_fitted(self, "x_")
        return self.x_


class NewtonMRClassifier(ClassifierMixin, BaseEstimator):
    """Binary classifier trained by Newton-MR on ``mean((sigmoid(Xw) - y)^2) + psi(w)``.

    Parameters
    ----------
    regularizer : {"none", "l2", "nonconvex"}
    variant : {"npc", "grad"}
        Inner-solver policy; see :func:`minres_npc.newton.newton_mr_run`.
    grad_tol, inner_rtol, maxouter
        Outer stopping tolerance, inner relative residual, outer cap.
    rho, shrink, max_backtracks
        Armijo line-search settings.
    w0 : array-like or None
        Starting weights; zeros if ``None``.
    """

    def __init__(
        self,
        regularizer="l2",
        variant="npc",
        grad_tol=1e-10,
        inner_rtol=0.01,
        maxouter=500,
        rho=1e-4,
        shrink=0.5,
        max_backtracks=50,
        w0=None,
    ):
        self.regularizer = regularizer
        self.variant = variant
        self.grad_tol = grad_tol
        self.inner_rtol = inner_rtol
        self.maxouter = maxouter
        self.rho = rho
        self.shrink = shrink
        self.max_backtracks = max_backtracks
        self.w0 = w0

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = check_binary_labels(y)
        self.classes_ = np.array([0.0, 1.0])
        prob = NlsProblem(X, y, self.regularizer)
        ls = LineSearchParams(rho=self.rho, shrink=self.shrink, max_backtracks=self.max_backtracks)
        config = NewtonConfig(self.grad_tol, self.inner_rtol, self.maxouter, line_search=ls)
        w, trace = newton_mr_run(prob, self.w0, self.variant, config)
        self.coef_ = w
        self.trace_ = trace
        self.n_iter_ = len(trace) - 1
        self.converged_ = trace.status == "converged"
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0.0).astype(np.float64)
