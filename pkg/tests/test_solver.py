import math

import numpy as np
import pytest
from scipy.linalg import expm

from unijadi import CostFunction, SolverConfig, Status, solve
from unijadi.problems import gen_near_diagonalizable, gen_random_joint_matrices
from unijadi.solver import (
    STRATEGIES,
    cyclic_pairs,
    select_pair_cyclic_threshold,
    select_pair_gradient_max,
)
from unijadi.unitary import make_rng, random_horizontal, random_unitary, unitarity_error

SWAP = np.array([[0, 1], [1, 0]], dtype=complex)
A2 = np.array([[1, 1], [1, 0]], dtype=complex)


def test_cyclic_pairs_order():
    assert cyclic_pairs(4) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_gradient_max_selection():
    lam = np.zeros((4, 4), dtype=complex)
    lam[1, 3], lam[3, 1] = 2 + 1j, -2 + 1j
    lam[0, 2], lam[2, 0] = 1.0, -1.0
    assert select_pair_gradient_max(lam) == ((1, 3), False)
    assert select_pair_gradient_max(np.zeros((3, 3))) == ((0, 1), True)


def test_gradient_max_tie_goes_to_first():
    lam = np.zeros((3, 3), dtype=complex)
    lam[0, 2], lam[2, 0] = 1.0, -1.0
    lam[1, 2], lam[2, 1] = 1.0, -1.0
    assert select_pair_gradient_max(lam)[0] == (0, 2)


def test_threshold_selection_skips_to_large_entry():
    n = 4
    lam = np.zeros((n, n), dtype=complex)
    lam[0, 2], lam[2, 0] = 1.0, -1.0
    lam[0, 1], lam[1, 0] = 1e-3, -1e-3
    pair, cursor, visited = select_pair_cyclic_threshold(lam, (0, 1), math.sqrt(2) / n)
    assert pair == (0, 2) and cursor == (0, 3) and visited == 2


def test_threshold_selection_wraps_and_stationary():
    lam = np.zeros((3, 3), dtype=complex)
    lam[0, 1], lam[1, 0] = 1.0, -1.0
    pair, cursor, visited = select_pair_cyclic_threshold(lam, (1, 2), 0.1)
    assert pair == (0, 1) and cursor == (0, 2) and visited == 2
    assert select_pair_cyclic_threshold(np.zeros((3, 3)), (0, 2), 0.1) == (None, (0, 2), 0)
    with pytest.raises(ValueError):
        select_pair_cyclic_threshold(lam, (0, 1), 1.0)


def test_threshold_feasibility_random(rng):
    n = 6
    delta = math.sqrt(2) / n
    for _ in range(200):
        lam = random_horizontal(n, rng)
        pair, _, visited = select_pair_cyclic_threshold(lam, (0, 1), delta)
        assert pair is not None and visited <= n * (n - 1) // 2


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(strategy="newton")
    with pytest.raises(ValueError):
        SolverConfig(grad_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(max_sweeps=0)
    assert abs(SolverConfig().resolved_delta(10) - 0.1 * math.sqrt(2) / 10) <= 1e-16
    with pytest.raises(ValueError):
        SolverConfig(delta=0.5).resolved_delta(10)


@pytest.mark.parametrize("strategy", ["gradient-max", "cyclic-threshold", "cyclic"])
def test_a2_single_rotation(strategy):
    res = solve(CostFunction.joint_matrices([A2]), np.eye(2), SolverConfig(strategy=strategy, grad_tol=1e-10))
    assert res.status == Status.CONVERGED
    assert res.rotations == 1
    assert abs(res.f_final - 3.0) <= 1e-12


def test_sd_a2():
    res = solve(CostFunction.joint_matrices([A2]), np.eye(2), SolverConfig(strategy="sd", grad_tol=1e-6))
    assert res.status == Status.CONVERGED
    assert abs(res.f_final - 3.0) <= 1e-6
    assert all(rec.rotation is None for rec in res.trace)


@pytest.mark.parametrize("strategy", ["gradient-max", "cyclic-threshold"])
def test_swap_saddle_stalls(strategy):
    res = solve(CostFunction.joint_matrices([SWAP]), np.eye(2), SolverConfig(strategy=strategy))
    assert res.status == Status.STALLED_AT_SADDLE
    assert res.saddle_pair == (0, 1)
    assert res.f_final == 0.0 and res.rotations == 0


def test_swap_saddle_escaped_by_cyclic():
    res = solve(CostFunction.joint_matrices([SWAP]), np.eye(2), SolverConfig(strategy="cyclic"))
    assert res.status == Status.CONVERGED
    assert res.rotations == 1
    assert abs(res.f_final - 2.0) <= 1e-12


def test_prediagonalized_zero_rotations():
    cost = CostFunction.joint_matrices([np.diag([1.0, 2.0, 3.0]), np.diag([3.0, 1.0, 2.0])])
    for strategy in STRATEGIES:
        res = solve(cost, np.eye(3), SolverConfig(strategy=strategy))
        assert res.status == Status.CONVERGED and res.rotations == 0


@pytest.mark.parametrize("strategy", ["gradient-max", "cyclic-threshold", "cyclic"])
def test_monotone_and_audited(strategy):
    cost, _ = gen_random_joint_matrices(6, 3, 11)
    res = solve(cost, np.eye(6), SolverConfig(strategy=strategy, max_sweeps=60))
    f = [res.f_initial] + [r.f for r in res.trace]
    assert np.all(np.diff(f) >= -1e-12)
    assert res.max_decrease <= 1e-12
    assert res.audit_max <= 1e-11
    assert unitarity_error(res.U_final) <= 1e-9
    assert res.status == Status.CONVERGED


def test_reproducible_traces():
    cost, _ = gen_random_joint_matrices(5, 2, 3)
    a = solve(cost, np.eye(5), SolverConfig(strategy="cyclic-threshold"))
    b = solve(cost, np.eye(5), SolverConfig(strategy="cyclic-threshold"))
    strip = lambda res: [{k: v for k, v in r.row().items() if k != "elapsed_s"} for r in res.trace]
    assert strip(a) == strip(b)


def test_max_sweeps_status():
    cost, _ = gen_random_joint_matrices(6, 3, 1)
    res = solve(cost, np.eye(6), SolverConfig(strategy="gradient-max", max_sweeps=1, grad_tol=1e-12))
    assert res.status == Status.MAX_SWEEPS
    assert res.rotations == 15


def test_sd_near_optimum_gradient_decreases():
    cost, gt = gen_near_diagonalizable(5, 5, 0.0, 4)
    U0 = gt.U_star @ expm(0.05 * random_horizontal(5, make_rng(0)))
    res = solve(cost, U0, SolverConfig(strategy="sd", grad_tol=1e-8, max_sweeps=20))
    g = [res.grad_norm_initial] + [r.grad_norm for r in res.trace]
    assert np.all(np.diff(g) <= 0)
    f = [res.f_initial] + [r.f for r in res.trace]
    assert np.all(np.diff(f) >= -1e-12)


def test_solve_defaults_and_kwargs():
    cost, _ = gen_random_joint_matrices(4, 2, 0)
    res = solve(cost, strategy="cyclic", grad_tol=1e-8)
    assert res.strategy == "cyclic" and res.grad_norm_final <= 1e-8
    with pytest.raises(ValueError):
        solve(cost, 2 * np.eye(4))


def test_summary_fields():
    res = solve(CostFunction.joint_matrices([SWAP]), np.eye(2))
    s = res.summary()
    assert s["status"] == "StalledAtSaddle" and s["saddle_pair"] == [0, 1]


def test_random_start_all_strategies_reach_same_value(rng):
    cost, gt = gen_near_diagonalizable(4, 4, 0.0, 2)
    U0 = random_unitary(4, rng)
    vals = [solve(cost, U0, SolverConfig(strategy=s, grad_tol=1e-9)).f_final for s in ("gradient-max", "cyclic-threshold", "cyclic")]
    np.testing.assert_allclose(vals, gt.f_star, rtol=1e-9)
