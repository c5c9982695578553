"""Dense complex-matrix kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; the
functions here validate their inputs at the boundary and stay pure.
Spectral work is delegated to LAPACK through :func:`numpy.linalg.eigh`.
"""

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import (
    DimensionMismatch,
    NotHermitian,
    NotPsd,
    NotSquare,
    NotUnitary,
    SpectralGapTooSmall,
)

__all__ = [
    "Isometry",
    "as_matrix",
    "commutator",
    "commutator_norm",
    "compress",
    "hermitian_eig",
    "identity",
    "is_projection",
    "op_norm",
    "polar_unitary",
    "psd_sqrt",
    "random_isometry",
    "random_unitary",
    "round_to_projection",
]


def as_matrix(M):
    """Coerce to a finite 2-D complex array, raising ``ValueError`` otherwise."""
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def identity(n):
    return np.eye(n, dtype=np.complex128)


def _require_square(A):
    if A.shape[0] != A.shape[1]:
        raise NotSquare(f"matrix of shape {A.shape} is not square")


def _require_hermitian(A, tol=None):
    _require_square(A)
    tol = TOL.hermitian if tol is None else tol
    asym = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    # cheap entrywise screen first, exact norm only near the threshold
    if asym > tol and op_norm(A - A.conj().T) > tol * max(1.0, np.max(np.abs(A))):
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds {tol:.1e}")


def hermitian_eig(M):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray of float, sorted in descending order
    eigenvectors : ndarray, unitary; column ``k`` belongs to ``eigenvalues[k]``
    """
    A = as_matrix(M)
    _require_hermitian(A)
    w, Q = np.linalg.eigh((A + A.conj().T) / 2)
    return w[::-1].copy(), Q[:, ::-1].copy()


def op_norm(M):
    """Operator (spectral) norm: the largest singular value."""
    A = as_matrix(M)
    # Gram matrix on the smaller side; same top eigenvalue either way.
    G = A.conj().T @ A if A.shape[1] <= A.shape[0] else A @ A.conj().T
    top = np.linalg.eigvalsh((G + G.conj().T) / 2)[-1]
    return float(np.sqrt(max(top, 0.0)))


def commutator(A, B):
    A, B = as_matrix(A), as_matrix(B)
    _require_square(A)
    _require_square(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"{A.shape} vs {B.shape}")
    return A @ B - B @ A


def commutator_norm(A, B):
    """``op_norm(AB - BA)``."""
    return op_norm(commutator(A, B))


def psd_sqrt(M):
    """Positive square root of a PSD matrix.

    Eigenvalues in ``[-TOL.psd_clamp, 0)`` are treated as round-off and
    clamped; anything below ``-TOL.psd_reject`` raises :class:`NotPsd`.
    Values in between are clamped too, which keeps near-PSD inputs usable.
    """
    w, Q = hermitian_eig(M)
    if w[-1] < -TOL.psd_reject:
        raise NotPsd(f"minimum eigenvalue {w[-1]:.3e}")
    R = (Q * np.sqrt(np.clip(w, 0.0, None))) @ Q.conj().T
    return (R + R.conj().T) / 2


def round_to_projection(M):
    """Spectral projection of a Hermitian matrix onto its eigenvalues above 1/2.

    If ``M`` is within ``delta < 1/2`` of some projection ``P`` the result is
    within ``2 * delta`` of ``P``.
    """
    w, Q = hermitian_eig(M)
    if np.any(np.abs(w - 0.5) <= TOL.gap):
        raise SpectralGapTooSmall("eigenvalue within %.1e of 1/2" % TOL.gap)
    V = Q[:, w > 0.5]
    P = V @ V.conj().T
    return (P + P.conj().T) / 2


def is_projection(P, tol=1e-10):
    P = as_matrix(P)
    if P.shape[0] != P.shape[1]:
        return False
    return op_norm(P @ P - P) <= tol and op_norm(P - P.conj().T) <= tol


def polar_unitary(C):
    """Unitary factor ``W`` of the polar decomposition ``C = W |C|``.

    For square ``C`` this is also the maximiser of ``Re tr(U^* C)`` over
    unitaries ``U``.
    """
    W, _, Zh = np.linalg.svd(as_matrix(C))
    return W @ Zh


@dataclass(frozen=True)
class Isometry:
    """A matrix ``V`` (target x source) with ``V^* V = 1``."""

    matrix: np.ndarray

    def __post_init__(self):
        V = as_matrix(self.matrix)
        if V.shape[0] < V.shape[1]:
            raise NotUnitary(f"isometry cannot have shape {V.shape}")
        defect = op_norm(V.conj().T @ V - identity(V.shape[1]))
        if defect > TOL.isometry * max(1, V.shape[0]) ** 0.5:
            raise NotUnitary(f"V^*V deviates from identity by {defect:.3e}")
        object.__setattr__(self, "matrix", V)

    @property
    def source_dim(self):
        return self.matrix.shape[1]

    @property
    def target_dim(self):
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, xi):
        xi = np.asarray(xi, dtype=np.complex128).reshape(-1, 1)
        return cls(xi / np.linalg.norm(xi))


def compress(M, V):
    """``V^* M V``: the compression of ``M`` to the range of ``V``."""
    M = as_matrix(M)
    Vm = V.matrix if isinstance(V, Isometry) else as_matrix(V)
    _require_square(M)
    if M.shape[0] != Vm.shape[0]:
        raise DimensionMismatch(
            f"operator acts on dim {M.shape[0]}, isometry targets dim {Vm.shape[0]}"
        )
    return Vm.conj().T @ M @ Vm


def random_unitary(dim, rng):
    """Haar-distributed unitary: QR of a complex Ginibre matrix with phase fix."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_isometry(target_dim, source_dim, rng):
    return Isometry(random_unitary(target_dim, rng)[:, :source_dim])
