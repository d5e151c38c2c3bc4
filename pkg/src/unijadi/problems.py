"""Seeded problem generators, some with known optima.

Randomness comes from a Philox counter-based generator; Gaussians are drawn
by Box-Muller from its uniform stream, so instances are reproducible across
platforms and numpy versions that share the Philox stream.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .cost import CostFunction, SquaredTerm
from .tensor import contract_matrix
from .unitary import complex_gaussian, make_rng, random_unitary

__all__ = [
    "GroundTruth",
    "gen_random_joint_matrices",
    "gen_near_diagonalizable",
    "gen_diagonal_tensor3",
    "gen_diagonal_trace4",
    "gen_random_tensor3",
    "gen_random_trace4",
    "diag_trace4_regular",
    "ground_truth_to_json",
    "ground_truth_from_json",
    "save_ground_truth",
]


@dataclass
class GroundTruth:
    U_star: np.ndarray | None = None
    f_star: float | None = None
    spectra: list | None = None
    expected_regular: bool | None = None


def gen_random_joint_matrices(n, L, seed):
    """``L`` general complex ``n x n`` matrices with real and imaginary parts in U[0, 1]."""
    if n < 2 or L < 1:
        raise ValueError("need n >= 2 and L >= 1")
    rng = make_rng(seed)
    mats = [rng.random((n, n)) + 1j * rng.random((n, n)) for _ in range(L)]
    return CostFunction.joint_matrices(mats), GroundTruth()


def gen_near_diagonalizable(n, L, noise_sigma, seed):
    """``A_l = Q^H D_l Q + E_l`` with ``D_l = I + e_l e_l^T``.

    The noiseless optimum is ``U_star = Q^H`` with ``f_star = L (n + 3)``.
    """
    if n < 2 or L < 1:
        raise ValueError("need n >= 2 and L >= 1")
    if L > n:
        raise ValueError(f"L={L} exceeds n={n}; the diagonal pattern needs L <= n")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    if L < n - 1:
        warnings.warn(
            f"L={L} < n-1 leaves index pairs beyond {L} unseparated; the optimum is not isolated",
            stacklevel=2,
        )
    rng = make_rng(seed)
    Q = random_unitary(n, rng)
    mats, spectra = [], []
    for ell in range(L):
        mu = np.ones(n)
        mu[ell] = 2.0
        A = Q.conj().T @ (mu[:, None] * Q)
        if noise_sigma > 0:
            A = A + complex_gaussian(rng, (n, n), sigma=noise_sigma)
        mats.append(A)
        spectra.append(mu.tolist())
    f_star = float(L * (n - 1 + 4))
    return CostFunction.joint_matrices(mats), GroundTruth(Q.conj().T, f_star, spectra)


def _rotate_core(D, U, conj_modes):
    T = D
    for k in range(D.ndim):
        M = U.conj() if k in conj_modes else U
        T = contract_matrix(T, k, M)
    return T


def gen_diagonal_tensor3(n, diag_values, seed):
    """Diagonal order-3 core hidden by a random unitary, ``t = 1``.

    ``A = D x_1 U* x_2 conj(U*) x_3 conj(U*)`` so that rotating back by ``U*``
    recovers ``D`` and ``f_star = sum |D_ppp|**2``.
    """
    vals = np.asarray(diag_values, dtype=np.complex128)
    if vals.shape != (n,):
        raise ValueError(f"expected {n} diagonal values")
    rng = make_rng(seed)
    U = random_unitary(n, rng)
    D = np.zeros((n, n, n), dtype=np.complex128)
    p = np.arange(n)
    D[p, p, p] = vals
    A = _rotate_core(D, U, conj_modes=(1, 2))
    cost = CostFunction.squared([SquaredTerm(A, 1, 1.0)])
    return cost, GroundTruth(U, float(np.sum(np.abs(vals) ** 2)), [vals.tolist()])


def diag_trace4_regular(vals):
    """Condition for a strict maximum of the diagonal order-4 trace form.

    Either all values are positive, or exactly one value ``D_i <= 0`` and
    ``D_i + D_j > 0`` for every ``j != i``.
    """
    vals = np.asarray(vals, dtype=np.float64)
    nonpos = np.flatnonzero(vals <= 0)
    if nonpos.size == 0:
        return True
    if nonpos.size > 1:
        return False
    i = nonpos[0]
    others = np.delete(vals, i)
    return bool(np.all(vals[i] + others > 0))


def gen_diagonal_trace4(n, diag_values, seed):
    """Hermitian order-4 trace form with a real diagonal core hidden by a random unitary."""
    vals = np.asarray(diag_values, dtype=np.float64)
    if vals.shape != (n,):
        raise ValueError(f"expected {n} diagonal values")
    rng = make_rng(seed)
    U = random_unitary(n, rng)
    D = np.zeros((n,) * 4, dtype=np.complex128)
    p = np.arange(n)
    D[p, p, p, p] = vals
    B = _rotate_core(D, U, conj_modes=(2, 3))
    cost = CostFunction.trace(B, 2)
    regular = diag_trace4_regular(vals)
    f_star = float(vals.sum())
    return cost, GroundTruth(U, f_star, [vals.tolist()], expected_regular=regular)


def gen_random_tensor3(n, seed, L=1, t=1):
    """Random complex Gaussian order-3 terms with ``t`` conjugated modes."""
    rng = make_rng(seed)
    terms = [SquaredTerm(complex_gaussian(rng, (n, n, n)), t, 1.0) for _ in range(L)]
    return CostFunction.squared(terms), GroundTruth()


def gen_random_trace4(n, seed):
    """Random Hermitian order-4 trace form."""
    rng = make_rng(seed)
    X = complex_gaussian(rng, (n, n, n, n))
    B = 0.5 * (X + X.transpose(2, 3, 0, 1).conj())
    return CostFunction.trace(B, 2), GroundTruth()


def ground_truth_to_json(gt):
    out = {}
    if gt.U_star is not None:
        U = np.asarray(gt.U_star)
        out["U_star"] = [[[float(z.real), float(z.imag)] for z in row] for row in U]
    if gt.f_star is not None:
        out["f_star"] = float(gt.f_star)
    if gt.spectra is not None:
        out["spectra"] = [
            [[float(np.real(v)), float(np.imag(v))] for v in s] for s in gt.spectra
        ]
    if gt.expected_regular is not None:
        out["expected_regular"] = bool(gt.expected_regular)
    return out


def ground_truth_from_json(obj):
    U = obj.get("U_star")
    if U is not None:
        arr = np.asarray(U, dtype=np.float64)
        U = arr[..., 0] + 1j * arr[..., 1]
    spectra = obj.get("spectra")
    if spectra is not None:
        spectra = [[complex(a, b) for a, b in s] for s in spectra]
    return GroundTruth(U, obj.get("f_star"), spectra, obj.get("expected_regular"))


def save_ground_truth(gt, path):
    with open(path, "w") as fh:
        json.dump(ground_truth_to_json(gt), fh)
        fh.write("\n")
