"""Cost functions on the unitary group and the state the solvers rotate.

Two families are supported:

* squared moduli, ``f(U) = sum_l alpha_l sum_p |g_{A_l, t_l}(u_p)|**2`` with
  ``A_l`` of order 1, 2 or 3;
* Hermitian trace forms, ``f(U) = sum_p g_{B, d}(u_p)`` with ``B`` of order
  ``2d``, ``d`` in ``{1, 2}``.

Terms sharing ``(order, t)`` are stacked along a leading axis so that the
cross updates after a plane rotation and the gradient rows are vectorized.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tc
from .unitary import check_unitary, polar, unitarity_error

__all__ = [
    "SquaredTerm",
    "CostFunction",
    "RotatedState",
    "evaluate",
    "rotate_full",
    "lambda_matrix",
    "apply_givens_update",
    "lambda_incremental_update",
    "scale_columns",
    "off_energy",
    "cost_to_json",
    "cost_from_json",
    "save_problem",
    "load_problem",
]

IMAG_TOL = 1e-10


@dataclass
class SquaredTerm:
    """One weighted term ``alpha * sum_p |g_{A,t}(u_p)|**2``.

    ``tensor`` is stored ``t``-semi-symmetrized; ``raw`` keeps the input so
    problem files round-trip exactly.
    """

    tensor: np.ndarray
    t: int
    alpha: float = 1.0
    raw: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        raw = tc.as_tensor(self.tensor if self.raw is None else self.raw, copy=True)
        d = raw.ndim
        if d not in (1, 2, 3):
            raise ValueError(f"squared terms must have order 1, 2 or 3, got {d}")
        self.t = int(self.t)
        if not 0 <= self.t <= d:
            raise ValueError(f"t={self.t} must lie in [0, {d}]")
        self.alpha = float(self.alpha)
        self.raw = raw
        self.tensor = tc.semi_symmetrize(raw, self.t)

    @property
    def order(self):
        return self.tensor.ndim


class CostFunction:
    """Either a weighted list of squared terms or a Hermitian trace form.

    Use :meth:`squared`, :meth:`trace` or :meth:`joint_matrices` to build one.
    """

    def __init__(self, kind, n, terms=(), B=None, d=None, B_raw=None):
        self.kind = kind
        self.n = int(n)
        self.terms = list(terms)
        self.B = B
        self.d = d
        self.B_raw = B_raw

    @classmethod
    def squared(cls, terms):
        terms = [t if isinstance(t, SquaredTerm) else SquaredTerm(*t) for t in terms]
        if not terms:
            raise ValueError("at least one term is required")
        n = terms[0].tensor.shape[0]
        for term in terms:
            if any(s != n for s in term.tensor.shape):
                raise ValueError(f"term of shape {term.tensor.shape} does not match n={n}")
        if n < 2:
            raise ValueError("dimension n must be at least 2")
        return cls("squared", n, terms=terms)

    @classmethod
    def joint_matrices(cls, matrices, alphas=None):
        """Joint diagonalization cost ``sum_l alpha_l ||diag(U^H A_l U)||**2``."""
        matrices = [np.asarray(A) for A in matrices]
        if alphas is None:
            alphas = [1.0] * len(matrices)
        return cls.squared([SquaredTerm(A, 1, a) for A, a in zip(matrices, alphas)])

    @classmethod
    def trace(cls, B, d, tol=1e-12):
        """Trace form ``sum_p g_{B,d}(u_p)``; ``B`` must be Hermitian of order ``2d``."""
        raw = tc.as_tensor(B, copy=True)
        d = int(d)
        if d not in (1, 2):
            raise ValueError(f"trace forms support d in (1, 2), got {d}")
        scale = max(1.0, float(np.max(np.abs(raw), initial=0.0)))
        if not tc.hermitian_check(raw, d, tol=tol * scale):
            raise ValueError("trace-form tensor is not Hermitian")
        n = raw.shape[0]
        if n < 2:
            raise ValueError("dimension n must be at least 2")
        Bs = tc.semi_symmetrize(raw, d)
        return cls("trace", n, B=Bs, d=d, B_raw=raw)

    @property
    def is_matrix_cost(self):
        """True for joint diagonalization of matrices (all terms order 2, ``t = 1``)."""
        return self.kind == "squared" and all(
            term.order == 2 and term.t == 1 for term in self.terms
        )

    def __repr__(self):
        if self.kind == "trace":
            return f"CostFunction(trace, n={self.n}, d={self.d})"
        return f"CostFunction(squared, n={self.n}, L={len(self.terms)})"


class _Block:
    """Stacked rotated tensors sharing order and conjugation count."""

    __slots__ = ("order", "t", "alphas", "index", "source", "W", "trace")

    def __init__(self, order, t, alphas, index, source, trace=False):
        self.order = order
        self.t = t
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.index = list(index)
        self.source = source  # (L, n, ..., n)
        self.W = None
        self.trace = trace

    def rotate(self, U):
        d = self.order
        letters = "abcdefghijklmnop"
        a_idx = letters[:d]
        p_idx = letters[d : 2 * d]
        subs = ",".join(a_idx[k] + p_idx[k] for k in range(d))
        expr = f"z{a_idx},{subs}->z{p_idx}"
        ops = [U.conj() if k < self.t else U for k in range(d)]
        self.W = np.einsum(expr, self.source, *ops, optimize=True)

    def diagonals(self):
        n = self.W.shape[1]
        p = np.arange(n)
        return self.W[(slice(None),) + (p,) * self.order]

    def value(self):
        D = self.diagonals()
        if self.trace:
            return D.sum(axis=1) @ self.alphas
        return (np.abs(D) ** 2).sum(axis=1) @ self.alphas

    def m_entries(self, rows, cols):
        """Entries ``M[a, b]`` for ``a`` in rows, ``b`` in cols, with ``Lambda = M - M^H``."""
        rows = np.asarray(rows)[:, None]
        cols = np.asarray(cols)[None, :]
        d, t = self.order, self.t
        Z = slice(None)
        if self.trace:
            P = self.W[(Z, rows) + (cols,) * (d - 1)]
            return (d // 2) * np.tensordot(self.alphas, P, axes=1)
        D = self.W[(Z,) + (cols,) * d]
        out = np.zeros((rows.shape[0], cols.shape[1]), dtype=np.complex128)
        if t > 0:
            P = self.W[(Z, rows) + (cols,) * (d - 1)]
            out += t * np.tensordot(self.alphas, D.conj() * P, axes=1)
        if d - t > 0:
            Q = self.W[(Z,) + (cols,) * (d - 1) + (rows,)]
            out += (d - t) * np.tensordot(self.alphas, D * Q.conj(), axes=1)
        return out

    def cross_update(self, i, j, psi):
        """Apply the plane rotation to every mode, touching only slices ``i`` and ``j``."""
        mats = (psi.conj().T, psi.T)
        for k in range(self.order):
            m = mats[0] if k < self.t else mats[1]
            X = np.moveaxis(self.W, k + 1, 0)
            xi = X[i].copy()
            xj = X[j]
            X[i] = m[0, 0] * xi + m[0, 1] * xj
            X[j] = m[1, 0] * xi + m[1, 1] * xj


def _make_blocks(cost):
    if cost.kind == "trace":
        return [_Block(2 * cost.d, cost.d, [1.0], [0], cost.B[None], trace=True)]
    groups = {}
    for idx, term in enumerate(cost.terms):
        groups.setdefault((term.order, term.t), []).append(idx)
    blocks = []
    for (order, t), idx in sorted(groups.items()):
        src = np.stack([cost.terms[k].tensor for k in idx])
        alphas = [cost.terms[k].alpha for k in idx]
        blocks.append(_Block(order, t, alphas, idx, src))
    return blocks


def _real_value(value, scale):
    value = complex(value)
    if abs(value.imag) > IMAG_TOL * (1.0 + abs(scale)):
        raise ArithmeticError(f"cost has imaginary residue {value.imag:.3e}")
    return value.real


class RotatedState:
    """Current ``U`` together with the rotated tensors and the cached ``Lambda(U)``.

    Attributes
    ----------
    U : ndarray
        Current unitary iterate.
    lam : ndarray
        Skew-Hermitian gradient matrix ``Lambda(U)``, kept current incrementally.
    f_value : float
        Cost at ``U``.
    refresh_interval : int
        Rotations between polar re-orthonormalization and full recompute.
    drift_tol : float
        Unitarity drift that forces an early refresh.
    """

    DRIFT_CHECK_EVERY = 64

    def __init__(self, cost, U, refresh_interval=1000, drift_tol=1e-9):
        self.cost = cost
        self.U = np.array(U, dtype=np.complex128)
        self.refresh_interval = int(refresh_interval)
        self.drift_tol = float(drift_tol)
        self.blocks = _make_blocks(cost)
        self.rotations = 0
        self.refreshes = 0
        self._since_refresh = 0
        self.recompute()

    @property
    def n(self):
        return self.cost.n

    def recompute(self):
        """Rebuild rotated tensors, ``f`` and ``Lambda`` from ``U``."""
        for b in self.blocks:
            b.rotate(self.U)
        self.f_value = self._value()
        self.lam = self._full_lambda()

    def _value(self):
        return _real_value(sum(b.value() for b in self.blocks), 0.0)

    def _full_lambda(self):
        idx = np.arange(self.n)
        M = sum(b.m_entries(idx, idx) for b in self.blocks)
        lam = M - M.conj().T
        np.fill_diagonal(lam, 0.0)
        return lam

    @property
    def rotated(self):
        """Rotated tensors in term order (``[V]`` for a trace form)."""
        out = [None] * (len(self.cost.terms) if self.cost.kind == "squared" else 1)
        for b in self.blocks:
            for slot, k in enumerate(b.index):
                out[k] = b.W[slot]
        return out

    @property
    def grad_norm(self):
        return float(np.linalg.norm(self.lam))

    def copy(self):
        new = object.__new__(RotatedState)
        new.cost = self.cost
        new.U = self.U.copy()
        new.refresh_interval = self.refresh_interval
        new.drift_tol = self.drift_tol
        new.blocks = []
        for b in self.blocks:
            nb = _Block(b.order, b.t, b.alphas, b.index, b.source, trace=b.trace)
            nb.W = b.W.copy()
            new.blocks.append(nb)
        new.rotations = self.rotations
        new.refreshes = self.refreshes
        new._since_refresh = self._since_refresh
        new.f_value = self.f_value
        new.lam = self.lam.copy()
        return new

    def refresh(self):
        """Polar re-orthonormalization of ``U`` followed by a full recompute."""
        self.U = polar(self.U)
        self.recompute()
        self.refreshes += 1
        self._since_refresh = 0


def _check_cost_dims(cost, U):
    U = np.asarray(U)
    if U.shape != (cost.n, cost.n):
        raise ValueError(f"U has shape {U.shape}, expected {(cost.n, cost.n)}")


def evaluate(cost, U):
    """Cost value ``f(U)``.

    Raises ``ValueError`` when ``U`` is not unitary within 1e-8.
    """
    _check_cost_dims(cost, U)
    U = check_unitary(U)
    total = 0.0
    if cost.kind == "trace":
        V = tc.rotate_tensor(cost.B, cost.d, U)
        return _real_value(tc.diagonal(V).sum(), 0.0)
    for term in cost.terms:
        W = tc.rotate_tensor(term.tensor, term.t, U)
        total += term.alpha * float(np.sum(np.abs(tc.diagonal(W)) ** 2))
    return total


def rotate_full(cost, U, refresh_interval=1000, drift_tol=1e-9):
    """Fresh :class:`RotatedState` at ``U``."""
    _check_cost_dims(cost, U)
    U = check_unitary(U)
    return RotatedState(cost, U, refresh_interval=refresh_interval, drift_tol=drift_tol)


def lambda_matrix(state):
    """Full recomputation of ``Lambda(U)`` from the rotated tensors."""
    return state._full_lambda()


def lambda_incremental_update(state, pair):
    """Refresh rows and columns ``i, j`` of the cached ``Lambda``; returns it."""
    i, j = pair
    S = np.array([i, j])
    idx = np.arange(state.n)
    rows = sum(b.m_entries(S, idx) for b in state.blocks)
    cols = sum(b.m_entries(idx, S) for b in state.blocks)
    R = rows - cols.conj().T
    R[0, i] = 0.0
    R[1, j] = 0.0
    lam = state.lam
    lam[S, :] = R
    lam[:, S] = -R.conj().T
    return lam


def apply_givens_update(state, pair, rot):
    """Rotate ``state`` in place by ``G(i, j, Psi)``; returns the state.

    Only the cross of each rotated tensor is touched; ``f`` and ``Lambda``
    are refreshed incrementally. The refresh policy of the state may trigger a
    polar re-orthonormalization and full recompute.
    """
    i, j = pair
    if not 0 <= i < j < state.n:
        raise ValueError(f"invalid pair {pair} for n={state.n}")
    rot.validate()
    psi = rot.psi
    cols = state.U[:, [i, j]] @ psi
    state.U[:, [i, j]] = cols
    for b in state.blocks:
        b.cross_update(i, j, psi)
    state.rotations += 1
    state._since_refresh += 1
    if state._since_refresh >= state.refresh_interval or (
        state._since_refresh % state.DRIFT_CHECK_EVERY == 0
        and unitarity_error(state.U) > state.drift_tol
    ):
        state.refresh()
        return state
    state.f_value = state._value()
    lambda_incremental_update(state, pair)
    return state


def scale_columns(state, phases, tol=1e-14):
    """New state at ``U S`` with ``S = diag(phases)``."""
    z = np.asarray(phases, dtype=np.complex128)
    if z.shape != (state.n,):
        raise ValueError(f"expected {state.n} phases, got shape {z.shape}")
    if np.max(np.abs(np.abs(z) - 1.0)) > tol:
        raise ValueError("phases must have unit modulus")
    return RotatedState(
        state.cost, state.U * z[None, :],
        refresh_interval=state.refresh_interval, drift_tol=state.drift_tol,
    )


def off_energy(state):
    """Squared Frobenius norm of the off-diagonal part of every rotated tensor."""
    total = 0.0
    for W in state.rotated:
        mask = np.ones(W.shape, dtype=bool)
        p = np.arange(W.shape[0])
        mask[(p,) * W.ndim] = False
        total += float(np.sum(np.abs(W[mask]) ** 2))
    return total


def cost_to_json(cost):
    if cost.kind == "trace":
        return {"kind": "trace", "n": cost.n, "d": cost.d, "B": tc.tensor_to_json(cost.B_raw)}
    return {
        "kind": "squared",
        "n": cost.n,
        "terms": [
            {"t": term.t, "alpha": term.alpha, "tensor": tc.tensor_to_json(term.raw)}
            for term in cost.terms
        ],
    }


def _pointer_error(ptr, msg):
    return ValueError(f"{ptr}: {msg}")


def cost_from_json(obj):
    """Parse a problem object; schema violations raise ``ValueError`` with a JSON pointer."""
    if not isinstance(obj, dict):
        raise _pointer_error("", "problem must be an object")
    kind = obj.get("kind")
    if kind not in ("squared", "trace"):
        raise _pointer_error("/kind", f"expected 'squared' or 'trace', got {kind!r}")
    n = obj.get("n")
    if not isinstance(n, int) or n < 2:
        raise _pointer_error("/n", f"expected an integer >= 2, got {n!r}")
    if kind == "trace":
        d = obj.get("d")
        if d not in (1, 2):
            raise _pointer_error("/d", f"expected 1 or 2, got {d!r}")
        try:
            B = tc.tensor_from_json(obj.get("B"))
        except ValueError as exc:
            raise _pointer_error("/B", str(exc)) from exc
        if B.ndim != 2 * d or any(s != n for s in B.shape):
            raise _pointer_error("/B/dims", f"expected {2 * d} dims equal to {n}")
        try:
            return CostFunction.trace(B, d)
        except ValueError as exc:
            raise _pointer_error("/B", str(exc)) from exc
    terms = obj.get("terms")
    if not isinstance(terms, list) or not terms:
        raise _pointer_error("/terms", "expected a nonempty list")
    parsed = []
    for k, item in enumerate(terms):
        ptr = f"/terms/{k}"
        if not isinstance(item, dict):
            raise _pointer_error(ptr, "term must be an object")
        t, alpha = item.get("t"), item.get("alpha", 1.0)
        if not isinstance(t, int):
            raise _pointer_error(ptr + "/t", f"expected an integer, got {t!r}")
        if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
            raise _pointer_error(ptr + "/alpha", f"expected a number, got {alpha!r}")
        try:
            A = tc.tensor_from_json(item.get("tensor"))
        except ValueError as exc:
            raise _pointer_error(ptr + "/tensor", str(exc)) from exc
        if any(s != n for s in A.shape):
            raise _pointer_error(ptr + "/tensor/dims", f"expected all dims equal to {n}")
        try:
            parsed.append(SquaredTerm(A, t, alpha))
        except ValueError as exc:
            raise _pointer_error(ptr, str(exc)) from exc
    return CostFunction.squared(parsed)


def save_problem(cost, path):
    with open(path, "w") as fh:
        json.dump(cost_to_json(cost), fh)
        fh.write("\n")


def load_problem(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON: {exc}") from exc
    return cost_from_json(obj)
