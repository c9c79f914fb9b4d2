"""Random test systems with known spectra.

Every matrix is ``Q diag(lam) Q^T`` for a Haar-like orthogonal ``Q`` (QR of a
Gaussian matrix with the sign of ``R``'s diagonal fixed), so the eigenvalues,
the grade of a random right-hand side and the least-squares solution are all
known without running an eigensolver.
"""

from dataclasses import dataclass

import numpy as np

from .operators import DenseSymmetric, from_spectrum
from .rng import make_rng

KINDS = ("indefinite", "pd", "psd_range", "psd_null")
PSD_LOW = 1e-2
PSD_HIGH = 5.0


@dataclass
class Instance:
    """A system ``A x = b`` with its spectral data.

    ``grade`` is the dimension of the Krylov space generated by ``b``: the
    number of distinct eigenvalues whose eigenspace ``b`` touches.
    ``x_star`` is the minimum-norm solution when ``b`` lies in the range of
    ``A`` and ``None`` otherwise.
    """

    name: str
    kind: str
    A: DenseSymmetric
    b: np.ndarray
    eigenvalues: np.ndarray
    Q: np.ndarray
    grade: int
    x_star: np.ndarray | None

    @property
    def dim(self):
        return self.b.shape[0]

    @property
    def b_in_range(self):
        return self.x_star is not None


def random_orthogonal(rng, d):
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def _spectrum(rng, d, kind):
    if kind == "indefinite":
        mags = rng.uniform(0.5, 5.0, size=d)
        signs = np.where(rng.random(d) < 0.5, -1.0, 1.0)
        signs[0] = -1.0
        signs[1] = 1.0
        return mags * signs
    if kind == "pd":
        return rng.uniform(0.5, 5.0, size=d)
    # singular PSD: one or two zeros, then a positive spectrum reaching close
    # to zero so the smallest Ritz value does not lock onto 0 before the grade
    nzero = min(1 + int(rng.integers(0, 2)), d - 1)
    pos = np.exp(rng.uniform(np.log(PSD_LOW), np.log(PSD_HIGH), size=d - nzero))
    return np.concatenate([pos, np.zeros(nzero)])


def _psd_frame(rng, d, nzero):
    """Orthogonal frame whose last ``nzero`` columns are coordinate vectors.

    Null vectors that are exact coordinate vectors keep ``A`` exactly zero on
    those rows and columns, so a right-hand side in the range stays there
    under rounding.
    """
    Q = np.zeros((d, d))
    Q[: d - nzero, : d - nzero] = random_orthogonal(rng, d - nzero)
    Q[d - nzero :, d - nzero :] = np.eye(nzero)
    perm = rng.permutation(d)
    return Q[perm]


def make_instance(rng, d, kind, name=None):
    """Draw one instance of the given ``kind`` (see :data:`KINDS`)."""
    if kind not in KINDS:
        raise ValueError(f"unknown instance kind {kind!r}; choose from {KINDS}")
    if kind.startswith("psd") and d < 2:
        raise ValueError("singular PSD instances need d >= 2")
    rng = make_rng(rng)
    lam = _spectrum(rng, d, kind)
    if kind.startswith("psd"):
        Q = _psd_frame(rng, d, int(np.sum(lam == 0.0)))
    else:
        Q = random_orthogonal(rng, d)
    A = from_spectrum(lam, Q)
    if kind == "psd_range":
        b = A.dense() @ rng.standard_normal(d)
        touched = lam[lam != 0.0]
    else:
        b = rng.standard_normal(d)
        touched = lam
    grade = len(np.unique(touched))
    if kind == "psd_null":
        x_star = None
    else:
        inv = np.where(lam != 0.0, 1.0 / np.where(lam != 0.0, lam, 1.0), 0.0)
        x_star = Q @ (inv * (Q.T @ b))
    return Instance(name or f"{kind}-d{d}", kind, A, b, lam, Q, grade, x_star)


def instance_sweep(seed, trials, d_range=(4, 16), kinds=KINDS):
    """``trials`` instances cycling through ``kinds`` with ``d`` drawn from ``d_range``."""
    rng = make_rng(seed)
    out = []
    for t in range(trials):
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        kind = kinds[t % len(kinds)]
        out.append(make_instance(rng, d, kind, name=f"trial{t:03d}-{kind}-d{d}"))
    return out
