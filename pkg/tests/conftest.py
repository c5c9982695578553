import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20121105)


def ginibre(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def random_hermitian(rng, n):
    G = ginibre(rng, n)
    return (G + G.conj().T) / 2


def random_psd(rng, n, rank=None):
    G = ginibre(rng, n, n if rank is None else rank)
    return G @ G.conj().T


def qr_unitary(rng, n):
    Q, R = np.linalg.qr(ginibre(rng, n))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


# --- independent oracles: none of these touch the package's spectral code ---


def power_iteration_norm(M, iters=20000, tol=1e-15):
    """sqrt of the top eigenvalue of M^* M by plain power iteration."""
    G = M.conj().T @ M
    x = np.ones(G.shape[0], dtype=complex) / np.sqrt(G.shape[0])
    lam = 0.0
    for _ in range(iters):
        y = G @ x
        new = np.linalg.norm(y)
        x = y / new
        if abs(new - lam) <= tol * new:
            break
        lam = new
    return float(np.sqrt(np.vdot(x, G @ x).real))


def denman_beavers_sqrt(A, iters=100):
    """Principal square root by the Denman-Beavers iteration."""
    Y = A.astype(complex)
    Z = np.eye(A.shape[0], dtype=complex)
    for _ in range(iters):
        Y, Z = (Y + np.linalg.inv(Z)) / 2, (Z + np.linalg.inv(Y)) / 2
    return Y


def svd_norm(M):
    return float(np.linalg.svd(M, compute_uv=False)[0])
