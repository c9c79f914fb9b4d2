"""Vectors and symmetric linear operators.

Vectors are plain one-dimensional ``float64`` NumPy arrays. A
:class:`SymmetricOperator` is the only way the solvers touch a matrix: it
exposes ``apply`` (counted) and, when a dense backing exists, ``dense()`` for
the brute-force oracles.
"""

import threading

import numpy as np

from .errors import DimensionError, ValidationError


def as_vector(v, name="vector"):
    """Return ``v`` as a 1-D float64 array, raising on anything else."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def dot(u, v):
    """Inner product of two equal-length vectors."""
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape[0] != v.shape[0]:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float(u @ v)


def norm(v):
    return float(np.linalg.norm(as_vector(v)))


class SymmetricOperator:
    """A symmetric linear map ``v -> A v`` given by a callable.

    Parameters
    ----------
    matvec : callable
        Maps a length-``dim`` array to a length-``dim`` array.
    dim : int
        Dimension ``d`` of the operator.
    dense : ndarray, optional
        Dense symmetric backing, used only by oracles.

    Notes
    -----
    ``matvec_count`` is the number of counted applications so far. Updates are
    guarded by a lock so a shared operator can be read from several threads,
    though one solve should own one operator for meaningful counts.
    """

    def __init__(self, matvec, dim, dense=None):
        dim = int(dim)
        if dim < 1:
            raise ValidationError(f"dimension must be positive, got {dim}")
        self._matvec = matvec
        self.dim = dim
        self._dense = None if dense is None else np.asarray(dense, dtype=np.float64)
        self._count = 0
        self._lock = threading.Lock()

    @property
    def matvec_count(self):
        return self._count

    def reset_count(self):
        with self._lock:
            self._count = 0

    @property
    def has_dense(self):
        return self._dense is not None

    def dense(self):
        if self._dense is None:
            raise ValidationError("operator has no dense backing")
        return self._dense

    def apply(self, v, counted=True):
        """Return ``A v``.

        Uncounted applications exist for diagnostics that must not disturb
        oracle-call accounting.
        """
        v = as_vector(v)
        if v.shape[0] != self.dim:
            raise DimensionError(f"operator has dim {self.dim}, vector has length {v.shape[0]}")
        out = np.asarray(self._matvec(v), dtype=np.float64)
        if out.shape != (self.dim,):
            raise DimensionError(f"matvec returned shape {out.shape}, expected ({self.dim},)")
        if counted:
            with self._lock:
                self._count += 1
        return out

    __matmul__ = apply

    def __repr__(self):
        kind = "dense" if self.has_dense else "matrix-free"
        return f"{type(self).__name__}(dim={self.dim}, {kind})"


def apply_operator(A, v):
    """Counted matrix-vector product ``A v``."""
    return A.apply(v)


class DenseSymmetric(SymmetricOperator):
    """Dense real symmetric matrix stored by its upper triangle.

    The materialized matrix is rebuilt from the upper triangle, so it equals
    its transpose exactly.
    """

    def __init__(self, upper):
        upper = np.asarray(upper, dtype=np.float64)
        if upper.ndim != 2 or upper.shape[0] != upper.shape[1]:
            raise DimensionError(f"matrix must be square, got shape {upper.shape}")
        upper = np.triu(upper)
        self.upper = upper
        full = upper + np.triu(upper, 1).T
        super().__init__(full.__matmul__, full.shape[0], dense=full)

    @classmethod
    def from_matrix(cls, M, atol=None):
        """Build from a full matrix, checking symmetry.

        ``atol`` defaults to ``1e-12 * max|M|``; the lower triangle is then
        discarded.
        """
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"matrix must be square, got shape {M.shape}")
        scale = float(np.max(np.abs(M))) if M.size else 0.0
        tol = 1e-12 * scale if atol is None else atol
        if M.size and float(np.max(np.abs(M - M.T))) > tol:
            raise ValidationError("matrix is not symmetric")
        return cls(M)

    @property
    def matrix(self):
        return self._dense

    def __eq__(self, other):
        return isinstance(other, DenseSymmetric) and np.array_equal(self.upper, other.upper)

    __hash__ = None


def identity(d):
    return DenseSymmetric(np.eye(d))


def diagonal(entries):
    return DenseSymmetric(np.diag(as_vector(entries, "entries")))


def from_spectrum(eigenvalues, orthogonal_basis, tol=1e-10):
    """Return ``Q diag(lam) Q^T`` symmetrized by averaging with its transpose.

    Raises :class:`ValidationError` if the columns of ``Q`` are not
    orthonormal to ``tol`` in the max norm.
    """
    lam = as_vector(eigenvalues, "eigenvalues")
    Q = np.asarray(orthogonal_basis, dtype=np.float64)
    d = lam.shape[0]
    if Q.shape != (d, d):
        raise DimensionError(f"basis must be {d}x{d}, got {Q.shape}")
    err = float(np.max(np.abs(Q.T @ Q - np.eye(d))))
    if err > tol:
        raise ValidationError(f"basis columns are not orthonormal (max deviation {err:.3e})")
    M = (Q * lam) @ Q.T
    return DenseSymmetric(0.5 * (M + M.T))


def norm_estimate(alphas, offdiag):
    """Cheap ``||A||`` estimate from Lanczos coefficients.

    ``alphas`` holds alpha_1..alpha_k and ``offdiag`` holds beta_2..beta_{k+1};
    the estimate is ``max_k |alpha_k| + beta_k + beta_{k+1}`` with the
    rhs norm beta_1 excluded, since it does not belong to ``A``.
    """
    best = 0.0
    for j, a in enumerate(alphas):
        lo = offdiag[j - 1] if j >= 1 else 0.0
        hi = offdiag[j] if j < len(offdiag) else 0.0
        best = max(best, abs(a) + lo + hi)
    return best
