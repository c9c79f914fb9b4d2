"""MINRES with nonpositive-curvature detection, brute-force oracles and Newton-MR."""

from .errors import (
    DimensionError,
    LineSearchError,
    NumericalFailure,
    ParseError,
    ValidationError,
    ZeroRHSError,
)
from .estimators import MinresNPC, NewtonMRClassifier
from .lanczos import Tridiagonal, assemble_tridiagonal, lanczos_init, lanczos_step
from .minres import (
    MinresConfig,
    OutcomeKind,
    PSDVerdict,
    SolveOutcome,
    certify_psd,
    minres_solve,
)
from .newton import NlsProblem, newton_mr_run
from .operators import DenseSymmetric, SymmetricOperator, diagonal, from_spectrum, identity
from .rng import make_rng

__all__ = [
    "DenseSymmetric",
    "DimensionError",
    "LineSearchError",
    "MinresConfig",
    "MinresNPC",
    "NewtonMRClassifier",
    "NlsProblem",
    "NumericalFailure",
    "OutcomeKind",
    "PSDVerdict",
    "ParseError",
    "SolveOutcome",
    "SymmetricOperator",
    "Tridiagonal",
    "ValidationError",
    "ZeroRHSError",
    "assemble_tridiagonal",
    "certify_psd",
    "diagonal",
    "from_spectrum",
    "identity",
    "lanczos_init",
    "lanczos_step",
    "make_rng",
    "minres_solve",
    "newton_mr_run",
]
