"""Elementary plane rotations: the 3x3 form Gamma and its leading eigenvector.

For a pair ``(i, j)`` the cost restricted to ``U G(i, j, Psi)`` is the
quadratic form ``r^T Gamma r + C`` in ``r = (2c^2 - 1, -2 c s1, -2 c s2)``,
a unit vector. The best rotation is read off the leading eigenvector of
``Gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as tc

__all__ = [
    "GammaMatrix",
    "GivensRotation",
    "BASIS",
    "build_gamma",
    "build_gamma_generic",
    "build_gamma_fast",
    "leading_eigvec3",
    "rotation_from_w",
    "givens_matrix",
    "restriction_value",
    "restriction_gradient",
    "hessian_block",
    "jacobi_rotation",
]

# Hermitian basis of the traceless 2x2 matrices matching the r coordinates
BASIS = (
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
    np.array([[0, -1], [-1, 0]], dtype=np.complex128),
    np.array([[0, 1j], [-1j, 0]], dtype=np.complex128),
)

GAMMA_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class GammaMatrix:
    """Real symmetric ``gamma`` and constant ``C`` with ``h(r) = r^T gamma r + C``."""

    gamma: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.shape != (3, 3):
            raise ValueError(f"Gamma must be 3x3, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("Gamma entries must be finite")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "constant", float(self.constant))


@dataclass(frozen=True)
class GivensRotation:
    """Plane rotation ``Psi = [[c, -s], [conj(s), c]]`` with ``s = s1 + i s2``."""

    c: float = 1.0
    s1: float = 0.0
    s2: float = 0.0

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def from_angles(cls, theta, phi):
        """``c = cos(theta)``, ``s = sin(theta) exp(i phi)``."""
        s = math.sin(theta)
        return cls(math.cos(theta), s * math.cos(phi), s * math.sin(phi))

    @property
    def s(self):
        return complex(self.s1, self.s2)

    @property
    def psi(self):
        s = self.s
        return np.array([[self.c, -s], [s.conjugate(), self.c]], dtype=np.complex128)

    @property
    def r(self):
        c = self.c
        return np.array([2 * c * c - 1, -2 * c * self.s1, -2 * c * self.s2])

    def validate(self, tol=1e-12):
        if not all(math.isfinite(x) for x in (self.c, self.s1, self.s2)):
            raise ValueError("rotation parameters must be finite")
        err = abs(self.c**2 + self.s1**2 + self.s2**2 - 1.0)
        if err > tol:
            raise ValueError(f"c^2 + |s|^2 deviates from 1 by {err:.3e}")

    def is_identity(self):
        return self.c == 1.0 and self.s1 == 0.0 and self.s2 == 0.0


def _pair_blocks(state, pair):
    i, j = pair
    n = state.n
    if not 0 <= i < j < n:
        raise ValueError(f"invalid pair {pair} for n={n}")
    idx = np.array([i, j])
    for b in state.blocks:
        sub = b.W[np.ix_(*([np.arange(b.W.shape[0])] + [idx] * b.order))]
        yield b, sub


def _off_pair_constant(state, pair):
    mask = np.ones(state.n, dtype=bool)
    mask[list(pair)] = False
    C = 0.0
    for b in state.blocks:
        D = b.diagonals()[:, mask]
        if b.trace:
            C += float(np.real(D.sum(axis=1)) @ b.alphas)
        else:
            C += float((np.abs(D) ** 2).sum(axis=1) @ b.alphas)
    return C


def _hermitian_pair_forms(state, pair):
    """Per half-order ``d``: the summed order-``2d`` Hermitian 2-dim tensor."""
    forms = {}
    for b, sub in _pair_blocks(state, pair):
        if b.trace:
            d = b.order // 2
            B = np.tensordot(b.alphas, sub, axes=1)
        else:
            d = b.order
            B = sum(
                a * tc.tensor_square_to_hermitian(T, b.t) for a, T in zip(b.alphas, sub)
            )
        forms[d] = forms.get(d, 0) + B
    return forms


def _gamma_from_hermitian(B, d):
    """``Gamma`` (identity part folded in) for one Hermitian 2-dim order-``2d`` tensor."""
    B = tc.semi_symmetrize(B, d)
    # contract modes (k, d + k) with the identity for k >= 2
    R = B
    for k in range(d - 1, 1, -1):
        R = np.trace(R, axis1=k, axis2=R.ndim // 2 + k)
    if d == 1:
        T0 = np.trace(R)
        G = np.zeros((3, 3), dtype=np.complex128)
    else:
        T0 = np.einsum("abab->", R)
        E = np.stack(BASIS)
        G = np.einsum("abde,xad,ybe->xy", R, E, E)
        G = math.comb(d, 2) * 0.5 * (G + G.T)
    G = G + T0 * np.eye(3)
    G = 2.0 ** (1 - d) * G
    scale = 1.0 + float(np.max(np.abs(G)))
    if float(np.max(np.abs(G.imag))) > GAMMA_IMAG_TOL * scale:
        raise ArithmeticError(f"Gamma has imaginary residue {np.max(np.abs(G.imag)):.3e}")
    return G.real


def build_gamma_generic(state, pair):
    """Gamma through the Hermitian squaring and basis contractions (any supported order)."""
    G = np.zeros((3, 3))
    for d, B in _hermitian_pair_forms(state, pair).items():
        if d > 3:
            raise NotImplementedError(f"half-order d={d} has no closed-form update")
        G += _gamma_from_hermitian(B, d)
    return GammaMatrix(0.5 * (G + G.T), _off_pair_constant(state, pair))


def build_gamma_fast(state, pair):
    """Closed form for joint diagonalization of matrices (order-2 terms, ``t = 1``)."""
    if not state.cost.is_matrix_cost:
        raise ValueError("fast path needs a joint matrix cost")
    i, j = pair
    b = state.blocks[0]
    W = b.W
    wii, wjj, wij, wji = W[:, i, i], W[:, j, j], W[:, i, j], W[:, j, i]
    z = np.stack([wjj - wii, wij + wji, -1j * (wij - wji)])  # (3, L)
    G = (z * b.alphas) @ z.conj().T
    G = 0.5 * (G.real + float(np.abs(wjj + wii) ** 2 @ b.alphas) * np.eye(3))
    return GammaMatrix(0.5 * (G + G.T), _off_pair_constant(state, pair))


def build_gamma(state, pair):
    """``Gamma`` and ``C`` such that ``f(U G(i,j,Psi)) = r^T Gamma r + C``."""
    if state.cost.is_matrix_cost:
        return build_gamma_fast(state, pair)
    return build_gamma_generic(state, pair)


def _eigvals3(A):
    """Eigenvalues of a real symmetric 3x3 matrix in descending order (trigonometric)."""
    q = np.trace(A) / 3.0
    p1 = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
    p2 = (A[0, 0] - q) ** 2 + (A[1, 1] - q) ** 2 + (A[2, 2] - q) ** 2 + 2 * p1
    p = math.sqrt(p2 / 6.0)
    if p == 0.0:
        return np.array([q, q, q])
    Bm = (A - q * np.eye(3)) / p
    r = np.linalg.det(Bm) / 2.0
    phi = math.acos(min(1.0, max(-1.0, r))) / 3.0
    l1 = q + 2 * p * math.cos(phi)
    l3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    l2 = 3 * q - l1 - l3
    return np.sort([l1, l2, l3])[::-1]


def _null_vector(M):
    """Unit vector spanning the (numerical) null space of a rank-2 symmetric ``M``."""
    rows = M
    best = None
    for a, b in ((0, 1), (0, 2), (1, 2)):
        v = np.cross(rows[a], rows[b])
        nv = np.linalg.norm(v)
        if best is None or nv > best[1]:
            best = (v, nv)
    v, nv = best
    if nv == 0.0:
        return None
    return v / nv


def leading_eigvec3(G, deg_tol=1e-12):
    """Leading eigenpair of a real symmetric 3x3 matrix.

    Parameters
    ----------
    G : GammaMatrix or ndarray
    deg_tol : float
        Relative tolerance below which eigenvalues count as coincident.

    Returns
    -------
    lambda1 : float
    w : ndarray
        Unit eigenvector, normalized so ``w[0] >= 0``; when ``|w[0]| <= 1e-12``
        the first entry of largest magnitude is made positive.
    gap : float
        ``lambda1 - lambda2 >= 0``.
    """
    A = np.asarray(G.gamma if isinstance(G, GammaMatrix) else G, dtype=np.float64)
    if A.shape != (3, 3) or not np.all(np.isfinite(A)):
        raise ValueError("expected a finite 3x3 matrix")
    A = 0.5 * (A + A.T)
    lam = _eigvals3(A)
    l1, l2, l3 = lam
    scale = max(float(np.max(np.abs(A))), np.finfo(float).tiny)
    tol = deg_tol * scale
    if l1 - l3 <= tol:
        w = np.array([1.0, 0.0, 0.0])
    elif l1 - l2 <= tol:
        # double leading root: project the coordinate axes onto the eigenspace
        P = (A - l3 * np.eye(3)) / (l1 - l3)
        w = None
        for e in np.eye(3):
            v = P @ e
            if np.linalg.norm(v) > 0.5:
                w = v / np.linalg.norm(v)
                break
        if w is None:
            w = P[:, np.argmax(np.linalg.norm(P, axis=0))]
            w = w / np.linalg.norm(w)
    else:
        w = _null_vector(A - l1 * np.eye(3))
        if w is None:
            w = np.array([1.0, 0.0, 0.0])
        # one step of inverse iteration with a shift just above lambda1
        shift = l1 + max(1e-3 * (l1 - l2), 1e-14 * scale)
        try:
            v = np.linalg.solve(A - shift * np.eye(3), w)
            nv = np.linalg.norm(v)
            if np.isfinite(nv) and nv > 0:
                w = v / nv
        except np.linalg.LinAlgError:
            pass
    w = _normalize_sign(w)
    l1 = float(w @ A @ w)
    # second eigenvalue from the 2x2 compression onto the complement of w
    Q, _ = np.linalg.qr(np.column_stack([w, np.eye(3)]))
    S = Q[:, 1:].T @ A @ Q[:, 1:]
    l2 = 0.5 * (S[0, 0] + S[1, 1]) + math.hypot(0.5 * (S[0, 0] - S[1, 1]), S[0, 1])
    gap = max(0.0, float(l1 - l2))
    return l1, w, gap


def _normalize_sign(w):
    w = np.asarray(w, dtype=np.float64).copy()
    if abs(w[0]) <= 1e-12:
        k = int(np.argmax(np.abs(w)))
        if w[k] < 0:
            w = -w
    elif w[0] < 0:
        w = -w
    return w


def rotation_from_w(w):
    """Givens parameters with ``r(c, s1, s2) = w`` and ``c >= sqrt(2)/2``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (3,):
        raise ValueError("w must be a 3-vector")
    if abs(np.linalg.norm(w) - 1.0) > 1e-10:
        raise ValueError("w must be a unit vector")
    if w[0] < -1e-12:
        raise ValueError("w1 must be nonnegative")
    c = math.sqrt((max(w[0], 0.0) + 1.0) / 2.0)
    s1 = -w[1] / (2 * c)
    s2 = -w[2] / (2 * c)
    # s is accurate even when w1 is close to 1; recomputing c from it keeps the
    # unitarity error of Psi unbiased, so it does not accumulate in U
    c = math.sqrt(1.0 - (s1 * s1 + s2 * s2))
    return GivensRotation(c, s1, s2)


def givens_matrix(n, pair, rot):
    i, j = pair
    if not 0 <= i < j < n:
        raise ValueError(f"invalid pair {pair} for n={n}")
    G = np.eye(n, dtype=np.complex128)
    psi = rot.psi
    G[i, i], G[i, j] = psi[0, 0], psi[0, 1]
    G[j, i], G[j, j] = psi[1, 0], psi[1, 1]
    return G


def restriction_value(G, rot):
    r = rot.r
    return float(r @ G.gamma @ r + G.constant)


def restriction_gradient(G):
    """``Lambda_ij = 2 (Gamma_12 + i Gamma_13)``."""
    g = G.gamma
    return complex(2 * g[0, 1], 2 * g[0, 2])


def hessian_block(G):
    """Riemannian Hessian of the restricted cost at ``Psi = I``: ``2 (Gamma[1:,1:] - Gamma_11 I)``."""
    g = G.gamma
    return 2.0 * (g[1:, 1:] - g[0, 0] * np.eye(2))


def jacobi_rotation(state, pair):
    """Best rotation for ``pair``: returns ``(Gamma, rot, lambda1, gap, gain)``.

    ``gain = lambda1 - Gamma_11`` is the predicted increase of ``f``.
    """
    G = build_gamma(state, pair)
    lam1, w, gap = leading_eigvec3(G)
    rot = rotation_from_w(w)
    gain = lam1 - G.gamma[0, 0]
    return G, rot, lam1, gap, gain
