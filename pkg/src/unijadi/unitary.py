"""Small helpers on the unitary group: sampling, retraction, tangent directions."""
from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "make_rng",
    "box_muller",
    "complex_gaussian",
    "random_unitary",
    "random_phases",
    "random_horizontal",
    "polar",
    "expm",
    "unitarity_error",
    "check_unitary",
]


def make_rng(seed):
    """Counter-based generator (Philox) so streams are reproducible across platforms."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def box_muller(rng, size):
    """Standard normal samples built from pairs of uniforms."""
    size = (int(size),) if np.isscalar(size) else tuple(size)
    m = int(np.prod(size))
    k = (m + 1) // 2
    u1 = 1.0 - rng.random(k)  # (0, 1], keeps the log finite
    u2 = rng.random(k)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)])
    return z[:m].reshape(size)


def complex_gaussian(rng, size, sigma=1.0):
    """Complex Gaussian with independent real and imaginary parts of std ``sigma``."""
    size = (int(size),) if np.isscalar(size) else tuple(size)
    z = box_muller(rng, (2,) + size)
    return sigma * (z[0] + 1j * z[1])


def random_unitary(n, rng):
    """Haar-distributed unitary from the QR factorization of a complex Gaussian."""
    rng = make_rng(rng)
    Z = complex_gaussian(rng, (n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_phases(n, rng):
    rng = make_rng(rng)
    return np.exp(2j * np.pi * rng.random(n))


def random_horizontal(n, rng):
    """Skew-Hermitian ``Omega`` with zero diagonal and unit Frobenius norm."""
    rng = make_rng(rng)
    Z = complex_gaussian(rng, (n, n))
    Om = Z - Z.conj().T
    np.fill_diagonal(Om, 0.0)
    return Om / np.linalg.norm(Om)


def polar(M):
    """Unitary factor of the polar decomposition, the closest unitary to ``M``."""
    W, _, Vh = np.linalg.svd(M)
    return W @ Vh


def expm(M):
    return scipy.linalg.expm(M)


def unitarity_error(U):
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


def check_unitary(U, tol=1e-8):
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    err = unitarity_error(U)
    if err > tol:
        raise ValueError(f"matrix is not unitary: ||U^H U - I|| = {err:.3e} > {tol:.1e}")
    return U
