"""Symmetric Lanczos process with optional full reorthogonalization."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroRHSError
from .operators import as_vector

BREAKDOWN_RTOL = 1e-12


@dataclass
class LanczosState:
    """Working state of the Lanczos recursion.

    ``v_curr`` is v_k, the next vector to be multiplied; ``beta_curr`` is
    beta_k (``beta_curr`` is beta_1 = ||b|| before the first step).
    ``basis`` keeps every v_i when reorthogonalizing or when asked to.
    """

    v_prev: np.ndarray
    v_curr: np.ndarray
    beta_curr: float
    beta1: float
    k: int = 1
    reorth: bool = False
    basis: list | None = None
    alphas: list = field(default_factory=list)
    offdiag: list = field(default_factory=list)
    norm_est: float = 0.0
    broken_down: bool = False

    @property
    def breakdown_tol(self):
        # v_k has unit norm, so beta_{k+1} scales with ||A|| alone
        return BREAKDOWN_RTOL * self.norm_est


@dataclass
class Tridiagonal:
    """T_k via its diagonal alpha_1..alpha_k and off-diagonal beta_2..beta_{k+1}.

    ``betas`` has length k: the first k-1 entries are the off-diagonal of T_k
    and the last is beta_{k+1}, the extra row of the extended matrix.
    """

    alphas: np.ndarray
    betas: np.ndarray

    @property
    def k(self):
        return len(self.alphas)

    def matrix(self):
        k = self.k
        T = np.diag(self.alphas)
        if k > 1:
            off = self.betas[: k - 1]
            T += np.diag(off, 1) + np.diag(off, -1)
        return T

    def extended(self):
        k = self.k
        Tt = np.zeros((k + 1, k))
        Tt[:k] = self.matrix()
        Tt[k, k - 1] = self.betas[k - 1]
        return Tt


def lanczos_init(A, b, reorth=False, keep_basis=False):
    """Start the recursion at v_1 = b / ||b||.

    Returns ``(state, beta1)``. Raises :class:`ZeroRHSError` if ``b = 0``.
    """
    b = as_vector(b, "b")
    beta1 = float(np.linalg.norm(b))
    if beta1 == 0.0:
        raise ZeroRHSError("right-hand side is zero; x = 0 is optimal")
    v1 = b / beta1
    state = LanczosState(
        v_prev=np.zeros_like(v1),
        v_curr=v1,
        beta_curr=beta1,
        beta1=beta1,
        reorth=reorth,
        basis=[v1] if (reorth or keep_basis) else None,
    )
    return state, beta1


def lanczos_step(state, A):
    """Advance one step; returns ``(alpha_k, beta_{k+1}, state)``.

    Operation order is p = A v_k, alpha = v_k^T p, p -= beta_k v_{k-1},
    p -= alpha v_k, then (optionally) two passes of classical Gram-Schmidt
    against the stored basis. A beta_{k+1} under the breakdown tolerance is
    returned as exactly 0. The state is updated in place.
    """
    v = state.v_curr
    # beta_1 multiplies v_0 = 0 at k = 1
    beta_k = state.beta_curr if state.k > 1 else 0.0
    p = A.apply(v)
    alpha = float(v @ p)
    p = p - beta_k * state.v_prev
    p = p - alpha * v
    if state.reorth:
        V = np.array(state.basis).T
        for _ in range(2):
            p = p - V @ (V.T @ p)
    beta_next = float(np.linalg.norm(p))

    state.alphas.append(alpha)
    state.norm_est = max(state.norm_est, abs(alpha) + beta_k + beta_next)
    if beta_next <= state.breakdown_tol:
        beta_next = 0.0
        state.broken_down = True
    state.offdiag.append(beta_next)

    state.v_prev = v
    state.v_curr = p / beta_next if beta_next > 0.0 else np.zeros_like(p)
    state.beta_curr = beta_next
    state.k += 1
    if state.basis is not None and beta_next > 0.0:
        state.basis.append(state.v_curr)
    return alpha, beta_next, state


def assemble_tridiagonal(history):
    """Build :class:`Tridiagonal` from a state or any object with ``alphas``/``offdiag``."""
    alphas = np.asarray(history.alphas, dtype=np.float64)
    if alphas.size == 0:
        raise ValueError("no completed Lanczos steps")
    return Tridiagonal(alphas=alphas, betas=np.asarray(history.offdiag, dtype=np.float64))
