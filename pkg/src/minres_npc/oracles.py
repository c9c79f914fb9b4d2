"""Brute-force reference computations.

Nothing here shares code with the solver: eigenvalues come from Jacobi
rotations, determinants from LU with partial pivoting, and the reference
iterates from an explicit Krylov basis and normal equations solved with full
pivoting. Costs are cubic and meant for small dimensions.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure, ValidationError


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int


def _round_robin(n):
    """Pairings for one cyclic sweep: n-1 rounds of disjoint (p, q) pairs."""
    players = list(range(n)) + ([None] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p is not None and q is not None:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigen(M, tol=1e-12, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in a round-robin order
    whose rotations within a round act on disjoint index pairs and are applied
    together. Iterates until the off-diagonal Frobenius mass is at most
    ``tol * ||M||_F``.

    Parameters
    ----------
    M : array_like or DenseSymmetric
    tol : float
    max_sweeps : int

    Returns
    -------
    EigenDecomposition
        Eigenvalues ascending, eigenvectors as matching columns.
    """
    if hasattr(M, "dense"):
        M = M.dense()
    A = np.array(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = np.max(np.abs(A)) if A.size else 0.0
    if A.size and np.max(np.abs(A - A.T)) > 1e-12 * max(scale, 1e-300):
        raise ValidationError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    fro = float(np.linalg.norm(A))
    rounds = _round_robin(n) if n > 1 else []

    offmask = ~np.eye(n, dtype=bool)

    def off(X):
        return float(np.linalg.norm(X[offmask]))

    sweeps = 0
    while off(A) > tol * fro:
        if sweeps >= max_sweeps:
            raise NumericalFailure(f"Jacobi did not converge in {max_sweeps} sweeps")
        for pairs in rounds:
            p = np.array([pq[0] for pq in pairs])
            q = np.array([pq[1] for pq in pairs])
            apq = A[p, q]
            app = A[p, p]
            aqq = A[q, q]
            nz = apq != 0.0
            theta = np.zeros_like(apq)
            theta[nz] = (aqq[nz] - app[nz]) / (2.0 * apq[nz])
            t = np.zeros_like(apq)
            # hypot keeps 1 + theta^2 from overflowing when a_pq is tiny
            t[nz] = np.sign(theta[nz]) / (np.abs(theta[nz]) + np.hypot(1.0, theta[nz]))
            t[nz & (theta == 0.0)] = 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            J = np.eye(n)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A = 0.5 * (A + A.T)
            V = V @ J
        sweeps += 1
    lam = np.diag(A).copy()
    order = np.argsort(lam, kind="stable")
    return EigenDecomposition(lam[order], V[:, order], sweeps)


def lu_det(M):
    """Determinant by Gaussian elimination with partial pivoting."""
    U = np.array(M, dtype=np.float64)
    n = U.shape[0]
    if n == 0:
        return 1.0
    det = 1.0
    for j in range(n):
        piv = j + int(np.argmax(np.abs(U[j:, j])))
        if U[piv, j] == 0.0:
            return 0.0
        if piv != j:
            U[[j, piv]] = U[[piv, j]]
            det = -det
        det *= U[j, j]
        U[j + 1 :, j:] -= np.outer(U[j + 1 :, j] / U[j, j], U[j, j:])
    return float(det)


def _solve_full_pivot(M, rhs):
    """Solve a square system by Gaussian elimination with full pivoting."""
    A = np.array(M, dtype=np.float64)
    y = np.array(rhs, dtype=np.float64)
    n = A.shape[0]
    cols = np.arange(n)
    for j in range(n):
        sub = np.abs(A[j:, j:])
        i, l = np.unravel_index(int(np.argmax(sub)), sub.shape)
        i += j
        l += j
        if A[i, l] == 0.0:
            raise NumericalFailure("singular normal equations")
        A[[j, i]] = A[[i, j]]
        y[[j, i]] = y[[i, j]]
        A[:, [j, l]] = A[:, [l, j]]
        cols[[j, l]] = cols[[l, j]]
        f = A[j + 1 :, j] / A[j, j]
        A[j + 1 :, j:] -= np.outer(f, A[j, j:])
        y[j + 1 :] -= f * y[j]
    z = np.zeros(n)
    for j in range(n - 1, -1, -1):
        z[j] = (y[j] - A[j, j + 1 :] @ z[j + 1 :]) / A[j, j]
    out = np.zeros(n)
    out[cols] = z
    return out


def krylov_basis(A, b, k, rtol=1e-10):
    """Orthonormal basis of span{b, Ab, ..., A^{k-1} b} by repeated Gram-Schmidt.

    Each new direction is ``A`` applied to the newest basis vector, projected
    twice against all previous ones. Stops early at the grade.
    """
    M = A.dense() if hasattr(A, "dense") else np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    q = b / np.linalg.norm(b)
    Q = [q]
    scale = np.linalg.norm(M, 2)
    while len(Q) < k:
        w = M @ Q[-1]
        B = np.array(Q).T
        w = w - B @ (B.T @ w)
        w = w - B @ (B.T @ w)
        nw = np.linalg.norm(w)
        if nw <= rtol * max(scale, 1e-300):
            break
        Q.append(w / nw)
    return np.array(Q).T


def krylov_lsq_reference(A, b, k):
    """Minimizer of ``||b - A x||`` over the k-th Krylov subspace.

    Builds the explicit basis ``Q`` (truncated at the grade), forms the normal
    equations ``(AQ)^T (AQ) y = (AQ)^T b`` and solves them with full pivoting.
    """
    M = A.dense() if hasattr(A, "dense") else np.asarray(A, dtype=np.float64)
    Q = krylov_basis(M, b, k)
    AQ = M @ Q
    y = _solve_full_pivot(AQ.T @ AQ, AQ.T @ b)
    return Q @ y


@dataclass
class MinorTable:
    """Trailing minors keyed by ``(k, l)``.

    ``p[(k, l)] = det`` of the trailing l x l block of T_k (``1 <= l <= k``);
    ``q[(k, l)]`` the same for S_k (``1 <= l < k``). Lookups honour the
    conventions ``p(k,0) = q(k,0) = 1`` and ``p(k,-1) = q(k,-1) = 0``.
    """

    p: dict = field(default_factory=dict)
    q: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @staticmethod
    def _get(table, k, l):
        if l == 0:
            return 1.0
        if l == -1:
            return 0.0
        return table[(k, l)]

    def P(self, k, l):
        return self._get(self.p, k, l)

    def Q(self, k, l):
        return self._get(self.q, k, l)


def _last_iteration(history, K=None):
    done = history.completed
    return done if K is None else min(K, done)


def _T_trailing(history, k, l):
    a = history.alpha
    bt = history.beta
    T = np.zeros((l, l))
    for i in range(l):
        T[i, i] = a[k - l + 1 + i]
    for i in range(l - 1):
        T[i, i + 1] = T[i + 1, i] = bt[k - l + 2 + i]
    return T


def _S_trailing(history, k, l):
    d2, g2, ep = history.delta2, history.gamma2, history.eps
    S = np.zeros((l, l))
    for i in range(l):
        S[i, i] = d2[k - l + 1 + i]
    for i in range(l - 1):
        S[i, i + 1] = ep[k - l + 2 + i]
        S[i + 1, i] = g2[k - l + 1 + i]
    return S


def minors_direct(history, K=None):
    """Every p(k,l), q(k,l) for k <= K by dense LU determinants."""
    K = _last_iteration(history, K)
    table = MinorTable()
    for k in range(1, K + 1):
        for l in range(1, k + 1):
            table.p[(k, l)] = lu_det(_T_trailing(history, k, l))
        for l in range(1, k):
            table.q[(k, l)] = lu_det(_S_trailing(history, k, l))
    return table


def minors_recurrence(history, K=None):
    """q(k,l) from the three-term recurrence in delta2, gamma2 and eps.

    ``q(k,l) = delta2_{k-l+1} q(k,l-1) - gamma2_{k-l+1} eps_{k-l+2} q(k,l-2)``.
    The p table is filled by the analogous tridiagonal recurrence in alpha and
    beta.
    """
    K = _last_iteration(history, K)
    a, bt = history.alpha, history.beta
    d2, g2, ep = history.delta2, history.gamma2, history.eps
    table = MinorTable()
    for k in range(1, K + 1):
        for l in range(1, k + 1):
            j = k - l + 1
            table.p[(k, l)] = a[j] * table.P(k, l - 1) - (bt[j + 1] ** 2) * table.P(k, l - 2)
        for l in range(1, k):
            j = k - l + 1
            table.q[(k, l)] = d2[j] * table.Q(k, l - 1) - g2[j] * ep[j + 1] * table.Q(k, l - 2)
    return table


def minors_closed_form(history, K=None):
    """q(k,l) from trailing minors of T_k, the cosines and gamma1/gamma2.

    Evaluates

        q(k,l) = ( p(k,l) / prod_{i<=l} g2_{k-i}
                   + c_{k-l-1} sum_{i<=l} (-1)^{l-i+1} g1_{k-i} p(k,i-1)
                                          / prod_{j<=i} g2_{k-j} )
                 * prod_{i<=l} beta_{k-i+1}

    with p(k, .) from direct LU determinants. Entries that would divide by
    gamma2 = 0 are skipped and noted.
    """
    K = _last_iteration(history, K)
    g1, g2, c, bt = history.gamma1, history.gamma2, history.c, history.beta
    table = MinorTable()
    for k in range(1, K + 1):
        for l in range(0, k + 1):
            if l >= 1:
                table.p[(k, l)] = lu_det(_T_trailing(history, k, l))
        for l in range(1, k):
            dens = [g2[k - i] for i in range(1, l + 1)]
            if any(gv == 0.0 for gv in dens):
                table.notes.append(f"q({k},{l}) skipped: gamma2 = 0")
                continue
            prods = np.cumprod(dens)
            total = table.P(k, l) / prods[l - 1]
            acc = 0.0
            for i in range(1, l + 1):
                acc += (-1) ** (l - i + 1) * g1[k - i] * table.P(k, i - 1) / prods[i - 1]
            total += c[k - l - 1] * acc
            beta_prod = math.prod(bt[k - i + 1] for i in range(1, l + 1))
            table.q[(k, l)] = total * beta_prod
    return table


def dk_expansion_oracle(history, k, table=None):
    """d_k as the explicit combination of Lanczos vectors.

    ``d_k = sum_{l=0}^{k-1} (-1)^l q(k,l) / prod_{j=k-l}^{k} gamma2_j * v_{k-l}``
    """
    if history.v is None:
        raise ValidationError("history does not hold Lanczos vectors")
    if table is None:
        table = minors_recurrence(history, k)
    g2 = history.gamma2
    out = np.zeros_like(history.v[1])
    for l in range(0, k):
        denom = math.prod(g2[j] for j in range(k - l, k + 1))
        out += (-1) ** l * table.Q(k, l) / denom * history.v[k - l]
    return out
