"""Input checks shared by the estimators and the command line."""

import numpy as np

from .errors import DimensionError, ValidationError


def check_square_symmetric(M, name="A", atol=None):
    """Return ``M`` as a float64 square array, raising if it is not symmetric."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains non-finite entries")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    tol = 1e-12 * scale if atol is None else atol
    if M.size and float(np.max(np.abs(M - M.T))) > tol:
        raise ValidationError(f"{name} is not symmetric")
    return M


def check_rhs(b, dim, name="b"):
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {b.shape}")
    if b.shape[0] != dim:
        raise DimensionError(f"{name} has length {b.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(b)):
        raise ValidationError(f"{name} contains non-finite entries")
    return b


def check_binary_labels(y):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise DimensionError(f"labels must be one-dimensional, got shape {y.shape}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("labels must be 0 or 1")
    return y


def check_positive(value, name, allow_zero=False):
    ok = value >= 0 if allow_zero else value > 0
    if not ok:
        bound = "nonnegative" if allow_zero else "positive"
        raise ValidationError(f"{name} must be {bound}, got {value}")
    return value
