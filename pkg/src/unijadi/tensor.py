"""Dense complex tensors: mode contractions, restrictions and symmetries.

Tensors are plain C-ordered ``complex128`` numpy arrays; all indices are
0-based. A "form" ``g_{A,t}(u)`` contracts the first ``t`` modes of ``A``
with ``conj(u)`` and the remaining modes with ``u``.
"""
from __future__ import annotations

import itertools
import math
import string

import numpy as np

__all__ = [
    "as_tensor",
    "as_scalar",
    "contract_vector",
    "contract_matrix",
    "subtensor_restrict",
    "semi_symmetrize",
    "is_semi_symmetric",
    "hermitian_check",
    "tensor_square_to_hermitian",
    "form_value",
    "rotate_tensor",
    "diagonal",
    "tensor_to_json",
    "tensor_from_json",
]

_LETTERS = string.ascii_letters


def as_tensor(data, copy=False):
    """Return ``data`` as a finite complex128 C-ordered array."""
    arr = np.array(data, dtype=np.complex128, order="C") if copy else (
        np.ascontiguousarray(data, dtype=np.complex128)
    )
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor entries must be finite")
    return arr


def as_scalar(T):
    """Value of an order-0 tensor (the result of a full contraction)."""
    T = np.asarray(T)
    if T.size != 1:
        raise ValueError(f"expected a single-entry tensor, got shape {T.shape}")
    return complex(T.reshape(-1)[0])


def _check_mode(T, mode):
    if not 0 <= mode < T.ndim:
        raise ValueError(f"mode {mode} out of range for order-{T.ndim} tensor")


def contract_vector(T, mode, v, conjugate=False):
    """Contract mode ``mode`` of ``T`` with the vector ``v``.

    The result has order ``d - 1``; the remaining indices keep their order.
    """
    T = np.asarray(T)
    v = np.asarray(v)
    _check_mode(T, mode)
    if v.ndim != 1 or v.shape[0] != T.shape[mode]:
        raise ValueError(
            f"vector of length {v.shape} does not match dimension {T.shape[mode]}"
        )
    if conjugate:
        v = v.conj()
    return np.tensordot(T, v, axes=([mode], [0]))


def contract_matrix(T, mode, M, conjugate=False):
    """Mode product ``(T x_mode M)[.., p, ..] = sum_q T[.., q, ..] M[p, q]``."""
    T = np.asarray(T)
    M = np.asarray(M)
    _check_mode(T, mode)
    if M.ndim != 2 or M.shape[1] != T.shape[mode]:
        raise ValueError(
            f"matrix of shape {M.shape} does not match dimension {T.shape[mode]}"
        )
    if conjugate:
        M = M.conj()
    out = np.tensordot(T, M, axes=([mode], [1]))
    return np.ascontiguousarray(np.moveaxis(out, -1, mode))


def _check_cubical(T):
    if T.ndim == 0:
        raise ValueError("order-0 tensor has no modes")
    n = T.shape[0]
    if any(s != n for s in T.shape):
        raise ValueError(f"all dimensions must be equal, got {T.shape}")
    return n


def subtensor_restrict(T, pair):
    """The 2 x ... x 2 subtensor of ``T`` on indices ``(i, j)`` in every mode."""
    T = np.asarray(T)
    n = _check_cubical(T)
    i, j = pair
    if not 0 <= i < j < n:
        raise ValueError(f"invalid pair {pair} for dimension {n}")
    idx = np.array([i, j])
    return T[np.ix_(*([idx] * T.ndim))]


def semi_symmetrize(T, t):
    """Average ``T`` over index permutations inside modes ``[0, t)`` and ``[t, d)``.

    The form ``g_{T,t}`` is unchanged by this operation.
    """
    T = np.asarray(T)
    d = T.ndim
    if not 0 <= t <= d:
        raise ValueError(f"t={t} must lie in [0, {d}]")
    if d:
        _check_cubical(T)
    perms = [
        p1 + p2
        for p1 in itertools.permutations(range(t))
        for p2 in itertools.permutations(range(t, d))
    ]
    if len(perms) == 1:
        return np.array(T, dtype=np.complex128)
    out = np.zeros(T.shape, dtype=np.complex128)
    for p in perms:
        out += np.transpose(T, p)
    return out / len(perms)


def is_semi_symmetric(T, t, tol=1e-12):
    return bool(np.max(np.abs(semi_symmetrize(T, t) - T), initial=0.0) <= tol)


def hermitian_check(B, d, tol=1e-12):
    """True iff ``B[I, J] == conj(B[J, I])`` for the two groups of ``d`` modes."""
    B = np.asarray(B)
    if B.ndim % 2 or B.ndim != 2 * d:
        raise ValueError(f"order-{B.ndim} tensor is not of order 2*{d}")
    swapped = np.transpose(B, tuple(range(d, 2 * d)) + tuple(range(d)))
    return bool(np.max(np.abs(B - swapped.conj()), initial=0.0) <= tol)


def tensor_square_to_hermitian(A, t):
    """Hermitian ``B`` of order ``2d`` with ``g_{B,d}(u) = |g_{A,t}(u)|**2``.

    ``B[i_1..i_d, j_1..j_d] = A[i_1..i_t, j_{t+1}..j_d] * conj(A[j_1..j_t, i_{t+1}..i_d])``.
    """
    A = np.asarray(A)
    d = A.ndim
    if d == 0:
        raise ValueError("cannot square an order-0 tensor")
    if not 0 <= t <= d:
        raise ValueError(f"t={t} must lie in [0, {d}]")
    _check_cubical(A)
    ii, jj = _LETTERS[:d], _LETTERS[d : 2 * d]
    first = ii[:t] + jj[t:]
    second = jj[:t] + ii[t:]
    return np.einsum(f"{first},{second}->{ii}{jj}", A, A.conj())


def form_value(A, t, u):
    """Evaluate ``g_{A,t}(u)``: ``t`` contractions with ``conj(u)``, the rest with ``u``."""
    A = np.asarray(A)
    u = np.asarray(u, dtype=np.complex128)
    d = A.ndim
    out = A
    # contract from the last mode so earlier mode numbers stay valid
    for k in range(d - 1, -1, -1):
        out = contract_vector(out, k, u, conjugate=k < t)
    return complex(out)


def rotate_tensor(A, t, U):
    """``A x_1 U^H .. x_t U^H x_{t+1} U^T .. x_d U^T``.

    Entry ``[p, .., p]`` of the result equals ``g_{A,t}(U[:, p])``.
    """
    A = np.asarray(A)
    U = np.asarray(U)
    d = A.ndim
    subs = []
    ops = []
    letters = iter(_LETTERS)
    a_idx = [next(letters) for _ in range(d)]
    p_idx = [next(letters) for _ in range(d)]
    for k in range(d):
        ops.append(U.conj() if k < t else U)
        subs.append(a_idx[k] + p_idx[k])
    expr = "".join(a_idx) + "," + ",".join(subs) + "->" + "".join(p_idx)
    return np.einsum(expr, A, *ops, optimize=True)


def diagonal(T):
    """Vector of entries ``T[p, p, ..., p]``."""
    T = np.asarray(T)
    n = _check_cubical(T)
    p = np.arange(n)
    return T[(p,) * T.ndim]


def tensor_to_json(T):
    """Serialize to ``{"order", "dims", "data": [[re, im], ...]}`` (row-major)."""
    T = np.asarray(T, dtype=np.complex128)
    flat = T.reshape(-1)
    return {
        "order": int(T.ndim),
        "dims": [int(s) for s in T.shape],
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def tensor_from_json(obj):
    """Inverse of :func:`tensor_to_json`; raises ``ValueError`` on schema errors."""
    try:
        order = int(obj["order"])
        dims = [int(s) for s in obj["dims"]]
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed tensor object: {exc}") from exc
    if order != len(dims) or any(s <= 0 for s in dims):
        raise ValueError(f"order {order} inconsistent with dims {dims}")
    if len(data) != math.prod(dims):
        raise ValueError(f"data length {len(data)} != product of dims {dims}")
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("data entries must be [re, im] pairs")
    return as_tensor((arr[:, 0] + 1j * arr[:, 1]).reshape(dims))
