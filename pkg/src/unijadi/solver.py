"""Jacobi-G, cyclic Jacobi and a steepest-ascent baseline on the unitary group.

All solvers maximize the cost. Jacobi-G picks a pair ``(i, j)`` whose
gradient entry satisfies ``sqrt(2) |Lambda_ij| >= delta ||Lambda||`` and
applies the optimal plane rotation for that pair.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .cost import apply_givens_update, lambda_matrix, rotate_full
from .rotations import GivensRotation, build_gamma, hessian_block, jacobi_rotation
from .unitary import check_unitary, polar

__all__ = [
    "STRATEGIES",
    "Status",
    "SolverConfig",
    "IterationRecord",
    "SolveResult",
    "cyclic_pairs",
    "select_pair_gradient_max",
    "select_pair_cyclic_threshold",
    "jacobi_g_solve",
    "jacobi_cyclic_solve",
    "steepest_descent_solve",
    "solve",
    "find_saddle_pair",
    "TRACE_FIELDS",
]

STRATEGIES = ("gradient-max", "cyclic-threshold", "cyclic", "sd")
TRACE_FIELDS = (
    "iter", "sweep", "i", "j", "f", "grad_norm", "c", "s1", "s2", "gamma_gap", "elapsed_s",
)
ASCENT_SLACK = 1e-12


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_SWEEPS = "MaxSweeps"
    STALLED_AT_SADDLE = "StalledAtSaddle"


@dataclass
class SolverConfig:
    """Solver options.

    Parameters
    ----------
    strategy : str
        One of ``gradient-max``, ``cyclic-threshold``, ``cyclic`` or ``sd``.
    delta : float, optional
        Threshold of the cyclic-threshold rule; defaults to ``0.1 sqrt(2)/n``.
    grad_tol : float
        Stop once ``||Lambda||_F <= grad_tol``.
    max_sweeps : int
        Budget in sweeps of ``n(n-1)/2`` pair visits.
    rotation_skip_tol : float
        Relative gain, scaled by ``1 + |f|``, above which a stationary point
        counts as a saddle for the gradient-based solvers.
    refresh_interval : int
        Rotations between polar re-orthonormalization and full recompute.
    seed : int
        Recorded for reproducibility; the solvers themselves are deterministic.
    """

    strategy: str = "gradient-max"
    delta: float | None = None
    grad_tol: float = 1e-6
    max_sweeps: int = 200
    rotation_skip_tol: float = 1e-14
    refresh_interval: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; pick one of {STRATEGIES}")
        if not self.grad_tol > 0 or not self.rotation_skip_tol > 0:
            raise ValueError("tolerances must be positive")
        if int(self.max_sweeps) < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.refresh_interval < 1:
            raise ValueError("refresh_interval must be at least 1")
        self.max_sweeps = int(self.max_sweeps)

    def resolved_delta(self, n):
        delta = 0.1 * math.sqrt(2) / n if self.delta is None else float(self.delta)
        _check_delta(delta, n)
        return delta


@dataclass
class IterationRecord:
    """One applied rotation (or one accepted step for steepest ascent)."""

    iteration: int
    sweep: int
    pair: tuple
    f: float
    grad_norm: float
    rotation: GivensRotation | None
    gamma_gap: float
    elapsed: float
    grad_h: float = float("nan")  # sqrt(2) |Lambda_ij| before the rotation
    gain: float = float("nan")

    def row(self):
        rot = self.rotation
        i, j = self.pair
        return {
            "iter": self.iteration,
            "sweep": self.sweep,
            "i": i,
            "j": j,
            "f": self.f,
            "grad_norm": self.grad_norm,
            "c": float(rot.c) if rot else float("nan"),
            "s1": float(rot.s1) if rot else float("nan"),
            "s2": float(rot.s2) if rot else float("nan"),
            "gamma_gap": self.gamma_gap,
            "elapsed_s": self.elapsed,
        }


@dataclass
class SolveResult:
    U_final: np.ndarray
    f_final: float
    grad_norm_final: float
    status: Status
    trace: list = field(default_factory=list)
    f_initial: float = float("nan")
    grad_norm_initial: float = float("nan")
    saddle_pair: tuple | None = None
    sweeps: int = 0
    strategy: str = ""
    max_decrease: float = 0.0
    audit_max: float = 0.0
    state: object = field(default=None, repr=False)

    @property
    def rotations(self):
        return len(self.trace)

    def summary(self):
        out = {
            "status": self.status.value,
            "strategy": self.strategy,
            "f_initial": self.f_initial,
            "f_final": self.f_final,
            "grad_norm_final": self.grad_norm_final,
            "iterations": len(self.trace),
            "sweeps": self.sweeps,
        }
        if self.saddle_pair is not None:
            out["saddle_pair"] = list(self.saddle_pair)
        return out


def cyclic_pairs(n):
    """Cyclic-by-row order ``(0,1), (0,2), .., (n-2, n-1)``."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _check_delta(delta, n):
    if not 0 < delta <= math.sqrt(2) / n * (1 + 1e-12):
        raise ValueError(f"delta={delta} must lie in (0, sqrt(2)/n = {math.sqrt(2) / n:.6g}]")


def select_pair_gradient_max(lam):
    """Pair with the largest ``|Lambda_ij|``; ties go to the smallest ``(i, j)``.

    Returns
    -------
    pair : tuple
    grad_zero : bool
        True when ``Lambda`` vanishes; the caller should treat the point as stationary.
    """
    lam = np.asarray(lam)
    n = lam.shape[0]
    if n < 2:
        raise ValueError("need n >= 2")
    mag = np.abs(np.triu(lam, 1))
    k = int(np.argmax(mag))
    i, j = divmod(k, n)
    if mag[i, j] == 0.0:
        return (0, 1), True
    return (i, j), False


def select_pair_cyclic_threshold(lam, cursor, delta):
    """First pair from ``cursor`` on (cyclic-by-row) with ``sqrt(2)|Lambda_ij| >= delta ||Lambda||``.

    Returns
    -------
    pair : tuple or None
        ``None`` when ``Lambda = 0``.
    next_cursor : tuple
        The pair following the selected one.
    visited : int
        Number of pairs inspected, including the selected one.
    """
    lam = np.asarray(lam)
    n = lam.shape[0]
    _check_delta(delta, n)
    pairs = cyclic_pairs(n)
    npairs = len(pairs)
    norm = float(np.linalg.norm(lam))
    if norm == 0.0:
        return None, cursor, 0
    start = pairs.index(tuple(cursor))
    threshold = delta * norm * (1 - 1e-12)
    for step in range(npairs):
        pair = pairs[(start + step) % npairs]
        if math.sqrt(2) * abs(lam[pair]) >= threshold:
            return pair, pairs[(start + step + 1) % npairs], step + 1
    raise AssertionError("no pair met the threshold; delta feasibility violated")


def find_saddle_pair(state, skip_tol):
    """A pair whose restriction still strictly improves at a stationary point, or ``None``."""
    f = state.f_value
    best = None
    for pair in cyclic_pairs(state.n):
        G = build_gamma(state, pair)
        lam1 = float(np.linalg.eigvalsh(G.gamma)[-1])
        gain = lam1 - G.gamma[0, 0]
        curv = float(np.linalg.eigvalsh(hessian_block(G))[-1])
        scale = 1.0 + float(np.max(np.abs(G.gamma)))
        if gain > skip_tol * (1.0 + abs(f)) and curv > 1e-8 * scale:
            if best is None or gain > best[1]:
                best = (pair, gain)
    return None if best is None else best[0]


class _Run:
    """Bookkeeping shared by the rotation-based solvers."""

    def __init__(self, cost, U0, config):
        U0 = check_unitary(np.asarray(U0, dtype=np.complex128))
        self.config = config
        self.state = rotate_full(cost, U0, refresh_interval=config.refresh_interval)
        self.n = cost.n
        self.npairs = self.n * (self.n - 1) // 2
        self.trace = []
        self.t0 = time.perf_counter()
        self.f_initial = self.state.f_value
        self.grad_initial = self.state.grad_norm
        self.max_decrease = 0.0
        self.audit_max = 0.0

    def rotate(self, pair, sweep):
        st = self.state
        G, rot, lam1, gap, gain = jacobi_rotation(st, pair)
        grad_h = math.sqrt(2) * abs(st.lam[pair])
        f_prev = st.f_value
        apply_givens_update(st, pair, rot)
        self.max_decrease = max(self.max_decrease, f_prev - st.f_value)
        self.trace.append(
            IterationRecord(
                iteration=len(self.trace) + 1, sweep=sweep, pair=pair, f=st.f_value,
                grad_norm=st.grad_norm, rotation=rot, gamma_gap=gap,
                elapsed=time.perf_counter() - self.t0, grad_h=grad_h, gain=gain,
            )
        )

    def audit(self):
        full = lambda_matrix(self.state)
        dev = float(np.max(np.abs(full - self.state.lam)))
        self.audit_max = max(self.audit_max, dev / (1.0 + float(np.max(np.abs(full)))))

    def result(self, status, sweeps, saddle_pair=None):
        st = self.state
        return SolveResult(
            U_final=st.U.copy(), f_final=st.f_value, grad_norm_final=st.grad_norm,
            status=status, trace=self.trace, f_initial=self.f_initial,
            grad_norm_initial=self.grad_initial, saddle_pair=saddle_pair, sweeps=sweeps,
            strategy=self.config.strategy, max_decrease=self.max_decrease,
            audit_max=self.audit_max, state=st,
        )


def jacobi_g_solve(cost, U0, config):
    """Jacobi-G with gradient-max or cyclic-threshold pair selection.

    Every selected pair is rotated by its optimal plane rotation. The run
    stops at ``||Lambda|| <= grad_tol`` (``Converged``, or ``StalledAtSaddle``
    when some pair can still strictly improve with positive curvature) or
    when the sweep budget is spent (``MaxSweeps``).
    """
    if config.strategy not in ("gradient-max", "cyclic-threshold"):
        raise ValueError(f"jacobi_g_solve does not handle strategy {config.strategy!r}")
    run = _Run(cost, U0, config)
    st = run.state
    npairs = run.npairs
    budget = config.max_sweeps * npairs
    threshold = config.strategy == "cyclic-threshold"
    delta = config.resolved_delta(run.n) if threshold else None
    cursor = (0, 1)
    visits = 0
    last_sweep = 0
    while True:
        if st.grad_norm <= config.grad_tol:
            run.audit()
            saddle = find_saddle_pair(st, config.rotation_skip_tol)
            status = Status.STALLED_AT_SADDLE if saddle else Status.CONVERGED
            return run.result(status, _sweeps_done(run, visits, threshold), saddle)
        if threshold:
            pair, cursor, visited = select_pair_cyclic_threshold(st.lam, cursor, delta)
            if visits + visited > budget:
                run.audit()
                return run.result(Status.MAX_SWEEPS, config.max_sweeps)
            visits += visited
            sweep = (visits - 1) // npairs
        else:
            if len(run.trace) >= budget:
                run.audit()
                return run.result(Status.MAX_SWEEPS, config.max_sweeps)
            pair, _ = select_pair_gradient_max(st.lam)
            sweep = len(run.trace) // npairs
        if sweep != last_sweep:
            run.audit()
            last_sweep = sweep
        run.rotate(pair, sweep)


def _sweeps_done(run, visits, threshold):
    count = visits if threshold else len(run.trace)
    return math.ceil(count / run.npairs)


def jacobi_cyclic_solve(cost, U0, config):
    """Cyclic-by-row Jacobi: visit every pair each sweep, rotate whenever the gain is positive."""
    run = _Run(cost, U0, config)
    st = run.state
    pairs = cyclic_pairs(run.n)
    for sweep in range(config.max_sweeps):
        applied = 0
        for pair in pairs:
            G, rot, lam1, gap, gain = jacobi_rotation(st, pair)
            # near convergence the gain drowns in rounding while Lambda_ij does
            # not, so only exact no-ops are skipped
            if rot.is_identity():
                continue
            run.rotate(pair, sweep)
            applied += 1
        run.audit()
        if st.grad_norm <= config.grad_tol:
            return run.result(Status.CONVERGED, sweep + 1)
        if applied == 0:
            return run.result(Status.MAX_SWEEPS, sweep + 1)
    return run.result(Status.MAX_SWEEPS, config.max_sweeps)


def steepest_descent_solve(cost, U0, config, armijo=1e-4, max_halvings=60):
    """Riemannian steepest ascent along ``U Lambda`` with Armijo backtracking.

    Steps start at 1 and halve until ``f(R(tau)) >= f + armijo tau ||Lambda||^2``,
    where ``R(tau) = U polar(I + tau Lambda)``. The iteration budget is
    ``max_sweeps n(n-1)/2`` for comparability with the rotation solvers.
    """
    U0 = check_unitary(np.asarray(U0, dtype=np.complex128))
    state = rotate_full(cost, U0)
    n = cost.n
    npairs = n * (n - 1) // 2
    budget = config.max_sweeps * npairs
    t0 = time.perf_counter()
    trace = []
    f0, g0 = state.f_value, state.grad_norm
    max_decrease = 0.0
    status = Status.MAX_SWEEPS
    eye = np.eye(n)
    while len(trace) < budget:
        g = state.grad_norm
        if g <= config.grad_tol:
            status = Status.CONVERGED
            break
        lam = state.lam
        tau = 1.0
        accepted = None
        for _ in range(max_halvings):
            U_new = state.U @ polar(eye + tau * lam)
            trial = rotate_full(cost, U_new)
            if trial.f_value >= state.f_value + armijo * tau * g * g:
                accepted = trial
                break
            tau *= 0.5
        if accepted is None:
            break
        max_decrease = max(max_decrease, state.f_value - accepted.f_value)
        state = accepted
        k = len(trace) + 1
        trace.append(
            IterationRecord(
                iteration=k, sweep=(k - 1) // npairs, pair=(-1, -1), f=state.f_value,
                grad_norm=state.grad_norm, rotation=None, gamma_gap=float("nan"),
                elapsed=time.perf_counter() - t0, grad_h=g, gain=tau,
            )
        )
    return SolveResult(
        U_final=state.U.copy(), f_final=state.f_value, grad_norm_final=state.grad_norm,
        status=status, trace=trace, f_initial=f0, grad_norm_initial=g0,
        sweeps=math.ceil(len(trace) / npairs), strategy=config.strategy,
        max_decrease=max_decrease, state=state,
    )


def solve(cost, U0=None, config=None, **kwargs):
    """Dispatch on ``config.strategy``; ``U0`` defaults to the identity."""
    if config is None:
        config = SolverConfig(**kwargs)
    elif kwargs:
        config = SolverConfig(**{**asdict(config), **kwargs})
    if U0 is None:
        U0 = np.eye(cost.n, dtype=np.complex128)
    if config.strategy == "cyclic":
        return jacobi_cyclic_solve(cost, U0, config)
    if config.strategy == "sd":
        return steepest_descent_solve(cost, U0, config)
    return jacobi_g_solve(cost, U0, config)
