"""Numerical checks of gradients, Hessian blocks, invariances and convergence rates."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tc
from .cost import CostFunction, SquaredTerm, evaluate, off_energy, rotate_full, scale_columns
from .rotations import build_gamma, hessian_block, leading_eigvec3
from .solver import cyclic_pairs
from .unitary import expm, make_rng, random_horizontal, random_phases, random_unitary

__all__ = [
    "PairRegularity",
    "RegularityReport",
    "RateEstimate",
    "HessianCheck",
    "finite_diff_gradient_check",
    "regularity_check",
    "convergence_rate_fit",
    "hessian_closed_form_check",
    "hessian_second_difference",
    "invariance_check",
    "rotation_norm_identities",
    "sufficient_ascent_constant",
    "safeguard_constant",
    "estimate_smoothness",
    "iteration_bound",
    "iterations_to_tolerance",
]

ROTATION_BOUND_LOWER = math.sqrt(math.sqrt(2) + 2) / 2


def _directional_fd(cost, U, Om, step):
    fp = evaluate(cost, U @ expm(step * Om))
    fm = evaluate(cost, U @ expm(-step * Om))
    return (fp - fm) / (2 * step)


def finite_diff_gradient_check(cost, U, num_directions=10, step=1e-5, seed=0):
    """Worst relative error between ``<U Omega, U Lambda>`` and a central difference.

    The relative error of each direction is taken against
    ``max(|analytic|, ||Lambda||)``, so directions nearly orthogonal to the
    gradient do not inflate it. When ``Lambda = 0`` the absolute error is returned.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-7, 1e-3]")
    st = rotate_full(cost, U)
    lam = st.lam
    gnorm = float(np.linalg.norm(lam))
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(num_directions):
        Om = random_horizontal(cost.n, rng)
        analytic = float(np.real(np.vdot(Om, lam)))
        fd = _directional_fd(cost, st.U, Om, step)
        denom = max(abs(analytic), gnorm)
        err = abs(fd - analytic) / denom if denom > 0 else abs(fd - analytic)
        worst = max(worst, err)
    return worst


@dataclass
class PairRegularity:
    pair: tuple
    gamma_gap: float
    hessian_eigenvalues: np.ndarray
    is_negative_definite: bool
    is_singular: bool


@dataclass
class RegularityReport:
    """Per-pair Gamma gaps and Hessian blocks at an (approximately) stationary point.

    ``rank`` counts two dimensions per nonsingular block. The block-diagonal
    picture is exact only when every rotated tensor is diagonal; otherwise
    ``caveat`` is set and ``rank`` is only indicative.
    """

    pairs: list
    min_gap: float
    rank: int
    max_rank: int
    grad_norm: float
    caveat: bool
    notes: list = field(default_factory=list)

    @property
    def all_negative_definite(self):
        return all(p.is_negative_definite for p in self.pairs)

    @property
    def singular_pairs(self):
        return [p.pair for p in self.pairs if p.is_singular]

    def to_json(self):
        return {
            "min_gap": self.min_gap,
            "rank": self.rank,
            "max_rank": self.max_rank,
            "grad_norm": self.grad_norm,
            "caveat": self.caveat,
            "all_negative_definite": self.all_negative_definite,
            "singular_pairs": [list(p) for p in self.singular_pairs],
            "notes": list(self.notes),
        }


def regularity_check(cost, U, stationary_tol=1e-6, sing_tol=1e-8, diag_tol=1e-8):
    st = rotate_full(cost, U)
    notes = []
    if st.grad_norm > stationary_tol:
        msg = f"point is not stationary (||Lambda|| = {st.grad_norm:.3e})"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    pairs = []
    for pair in cyclic_pairs(cost.n):
        G = build_gamma(st, pair)
        _, _, gap = leading_eigvec3(G)
        H = hessian_block(G)
        ev = np.linalg.eigvalsh(H)
        scale = 1.0 + float(np.max(np.abs(G.gamma)))
        singular = bool(np.min(np.abs(ev)) <= sing_tol * scale)
        negdef = bool(ev[-1] < -sing_tol * scale)
        pairs.append(PairRegularity(pair, gap, ev, negdef, singular))
    off = off_energy(st)
    norm = sum(float(np.sum(np.abs(W) ** 2)) for W in st.rotated)
    caveat = off > diag_tol * max(norm, 1.0)
    if caveat:
        notes.append("rotated tensors are not diagonal; rank uses 2x2 blocks only")
    rank = 2 * sum(not p.is_singular for p in pairs)
    return RegularityReport(
        pairs=pairs,
        min_gap=min(p.gamma_gap for p in pairs),
        rank=rank,
        max_rank=cost.n * (cost.n - 1),
        grad_norm=st.grad_norm,
        caveat=caveat,
        notes=notes,
    )


@dataclass
class RateEstimate:
    linear_rate: float
    log_slope: float
    tail_fraction: float
    residual: float
    is_linear: bool


def convergence_rate_fit(trace, tail_fraction=0.5, min_records=20):
    """Fit linear convergence to the tail of a gradient-norm trace.

    Parameters
    ----------
    trace : sequence of IterationRecord or of floats
    tail_fraction : float
        Fraction of the final records used.

    Returns
    -------
    RateEstimate
        ``linear_rate`` is the median ratio ``g[k+1]/g[k]``, ``log_slope`` the
        least-squares slope of ``log g`` per iteration and ``residual`` the RMS
        misfit of that line in log10 units. Linear convergence is declared when
        ``linear_rate < 1`` and ``residual < 0.5``.
    """
    g = np.array([getattr(r, "grad_norm", r) for r in trace], dtype=np.float64)
    if g.size < min_records:
        raise ValueError(f"trace too short: {g.size} < {min_records} records")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("gradient norms must be positive and finite")
    m = max(int(math.ceil(tail_fraction * g.size)), 3)
    tail = g[-m:]
    rho = float(np.median(tail[1:] / tail[:-1]))
    k = np.arange(m, dtype=np.float64)
    coef = np.polyfit(k, np.log(tail), 1)
    fit = np.polyval(coef, k)
    resid = float(np.sqrt(np.mean(((np.log(tail) - fit) / math.log(10)) ** 2)))
    return RateEstimate(rho, float(coef[0]), float(tail_fraction), resid, bool(rho < 1 and resid < 0.5))


@dataclass
class HessianCheck:
    passed: bool
    numeric: np.ndarray
    closed_form: np.ndarray
    max_deviation: float


def _diagonal_core(values, order):
    values = np.asarray(values, dtype=np.complex128)
    n = values.shape[0]
    D = np.zeros((n,) * order, dtype=np.complex128)
    p = np.arange(n)
    D[(p,) * order] = values
    return D


def _as_diag_values(arr, order):
    """Accept a vector of diagonal values or a full diagonal tensor of the given order."""
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.ndim == 1:
        return arr
    if arr.ndim != order:
        raise ValueError(f"expected diagonal values or an order-{order} tensor")
    vals = tc.diagonal(arr)
    if np.max(np.abs(arr - _diagonal_core(vals, order))) > 0:
        raise ValueError("input tensor is not diagonal")
    return vals


def hessian_closed_form_check(kind, diag_values, pair, tol=1e-8):
    """Compare ``hessian_block(build_gamma(...))`` at ``U = I`` with the closed forms.

    ``kind`` is ``"matrices"`` (``diag_values`` is one spectrum, an ``(L, n)``
    array of spectra or an ``(L, n, n)`` stack of diagonal matrices), ``"tensor3"`` (``t = 1``) or ``"trace4"``
    (real values).
    """
    i, j = pair
    if kind == "matrices":
        arr = np.asarray(diag_values, dtype=np.complex128)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim == 3:
            spectra = [_as_diag_values(M, 2) for M in arr]
        elif arr.ndim == 2:
            spectra = list(arr)
        else:
            raise ValueError("expected spectra (L, n) or diagonal matrices (L, n, n)")
        cost = CostFunction.joint_matrices([_diagonal_core(mu, 2) for mu in spectra])
        closed = -sum(abs(mu[i] - mu[j]) ** 2 for mu in spectra) * np.eye(2)
    elif kind == "tensor3":
        D = _as_diag_values(diag_values, 3)
        cost = CostFunction.squared([SquaredTerm(_diagonal_core(D, 3), 1, 1.0)])
        closed = -1.5 * (abs(D[i]) ** 2 + abs(D[j]) ** 2) * np.eye(2)
    elif kind == "trace4":
        D = _as_diag_values(diag_values, 4)
        if np.max(np.abs(D.imag)) > 0:
            raise ValueError("trace-form diagonal values must be real")
        cost = CostFunction.trace(_diagonal_core(D.real, 4), 2)
        closed = -(D[i].real + D[j].real) * np.eye(2)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    st = rotate_full(cost, np.eye(cost.n))
    numeric = hessian_block(build_gamma(st, pair))
    dev = float(np.max(np.abs(numeric - closed)))
    return HessianCheck(dev <= tol, numeric, closed, dev)


def hessian_second_difference(cost, U, pair, alpha, step=1e-4):
    """Second difference of ``t -> f(U exp(t Omega))`` with ``Omega = a1 D1 + a2 D2`` in the pair plane.

    ``D1`` and ``D2`` are the horizontal directions rotating columns ``i, j``
    with real and imaginary coupling, scaled so that the quadratic form
    ``alpha^T H alpha`` of :func:`hessian_block` is the exact second derivative.
    """
    i, j = pair
    n = cost.n
    a1, a2 = alpha
    Om = np.zeros((n, n), dtype=np.complex128)
    Om[i, j] = -0.5 * a1 - 0.5j * a2
    Om[j, i] = 0.5 * a1 - 0.5j * a2
    f0 = evaluate(cost, U)
    fp = evaluate(cost, U @ expm(step * Om))
    fm = evaluate(cost, U @ expm(-step * Om))
    return (fp - 2 * f0 + fm) / step**2


def invariance_check(cost, U, trials=10, seed=0):
    """Largest deviation from the phase-scaling invariances.

    For ``S = diag(z)`` with ``|z_k| = 1``: ``f(U S) = f(U)`` and
    ``Lambda(U S) = S^H Lambda(U) S``, i.e. the Riemannian gradient obeys
    ``grad f(U S) = grad f(U) S``.
    """
    st = rotate_full(cost, U)
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        z = random_phases(cost.n, rng)
        new = scale_columns(st, z)
        expected = z.conj()[:, None] * st.lam * z[None, :]
        worst = max(
            worst,
            abs(new.f_value - st.f_value),
            float(np.linalg.norm(new.lam - expected)),
        )
    return worst


def rotation_norm_identities(rot):
    """Quantities behind ``||Psi - I||_F = 2 sqrt(1 - c)`` and the two-sided bound against ``sqrt(1 - w1^2)``.

    ``1 - c`` is evaluated as ``|s|^2 / (1 + c)`` and ``sqrt(1 - w1^2)`` as
    ``2 c |s|``, which avoids cancellation for rotations close to the identity.
    """
    c = rot.c
    s = abs(rot.s)
    psi_dist = float(np.linalg.norm(rot.psi - np.eye(2)))
    closed = 2.0 * s / math.sqrt(1.0 + c)
    sin_w = 2.0 * c * s
    upper_ok = math.sqrt(2) * psi_dist >= sin_w - 1e-12
    lower_ok = sin_w >= ROTATION_BOUND_LOWER * psi_dist - 1e-12
    return {
        "psi_dist": psi_dist,
        "closed_form": closed,
        "deviation": abs(psi_dist - closed),
        "sqrt_one_minus_w1sq": sin_w,
        "bounds_hold": bool(upper_ok and lower_ok),
    }


def sufficient_ascent_constant(result, floor=1e-8):
    """``min_k (f_k - f_{k-1}) / ||grad h_k(I)||**2`` over rotations with a non-negligible gradient.

    A rotation counts when ``||grad h_k(I)||**2 > floor (1 + |f|)``; below that
    the increase of ``f`` is buried in its rounding error.
    """
    f_prev = result.f_initial
    best = math.inf
    for rec in result.trace:
        if rec.grad_h**2 > floor * (1.0 + abs(f_prev)):
            best = min(best, (rec.f - f_prev) / rec.grad_h**2)
        f_prev = rec.f
    return best


def safeguard_constant(result, floor=1e-8):
    """``min_k ||Psi_k - I|| / ||grad h_k(I)||`` over applied rotations."""
    best = math.inf
    for rec in result.trace:
        if rec.rotation is None or rec.grad_h <= floor:
            continue
        best = min(best, rotation_norm_identities(rec.rotation)["psi_dist"] / rec.grad_h)
    return best


def estimate_smoothness(cost, points=None, samples=20, step=1e-3, seed=0):
    """Empirical ``L``: largest ``|f''|`` along unit-speed geodesics ``U exp(t Omega)``.

    Geodesics start at the given unitary ``points`` (default: Haar samples).
    """
    rng = make_rng(seed)
    if points is None:
        points = [random_unitary(cost.n, rng) for _ in range(samples)]
    L_hat = 0.0
    for U in points:
        Om = random_horizontal(cost.n, rng)
        f0 = evaluate(cost, U)
        fp = evaluate(cost, U @ expm(step * Om))
        fm = evaluate(cost, U @ expm(-step * Om))
        L_hat = max(L_hat, abs(fp - 2 * f0 + fm) / step**2)
    return L_hat


def iteration_bound(L_hat, f_star, f0, delta, eps):
    """``ceil(2 L (f* - f0) / (delta^2 eps^2))``."""
    return int(math.ceil(2.0 * L_hat * max(f_star - f0, 0.0) / (delta**2 * eps**2)))


def iterations_to_tolerance(result, eps):
    """Index of the first record with ``grad_norm <= eps`` (0 if already there), else ``None``."""
    if result.grad_norm_initial <= eps:
        return 0
    for rec in result.trace:
        if rec.grad_norm <= eps:
            return rec.iteration
    return None
