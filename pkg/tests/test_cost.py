import json

import numpy as np
import pytest

from unijadi import CostFunction, SquaredTerm, evaluate, rotate_full
from unijadi import tensor as tc
from unijadi.cost import (
    apply_givens_update,
    cost_from_json,
    cost_to_json,
    lambda_matrix,
    load_problem,
    off_energy,
    save_problem,
    scale_columns,
)
from unijadi.rotations import GivensRotation
from unijadi.unitary import random_phases, random_unitary, unitarity_error

from helpers import VARIANTS, crandn, fd_lambda

SWAP = np.array([[0, 1], [1, 0]], dtype=complex)
A2 = np.array([[1, 1], [1, 0]], dtype=complex)


def random_rotation(rng):
    return GivensRotation.from_angles(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))


def test_evaluate_swap_after_hadamard_like_rotation():
    cost = CostFunction.joint_matrices([SWAP])
    U = np.array([[1, 1], [-1, 1]]) / np.sqrt(2)
    assert evaluate(cost, np.eye(2)) == 0.0
    assert abs(evaluate(cost, U) - 2.0) <= 1e-14


def test_evaluate_rejects_non_unitary():
    cost = CostFunction.joint_matrices([SWAP])
    with pytest.raises(ValueError):
        evaluate(cost, 1.01 * np.eye(2))
    with pytest.raises(ValueError):
        evaluate(cost, np.eye(3))


def test_rotated_matrix_term_matches_dense_product(rng):
    cost = VARIANTS["matrix"](rng)
    U = random_unitary(cost.n, rng)
    st = rotate_full(cost, U)
    for term, W in zip(cost.terms, st.rotated):
        np.testing.assert_allclose(W, U.conj().T @ term.tensor @ U, atol=1e-12)


def test_rotated_order3_diagonal_is_form(rng):
    A = crandn(rng, (4, 4, 4))
    cost = CostFunction.squared([SquaredTerm(A, 1, 1.0)])
    U = random_unitary(4, rng)
    W = rotate_full(cost, U).rotated[0]
    for p in range(4):
        assert abs(W[p, p, p] - tc.form_value(A, 1, U[:, p])) <= 1e-12


def test_lambda_known_value():
    st = rotate_full(CostFunction.joint_matrices([A2]), np.eye(2))
    np.testing.assert_allclose(st.lam, [[0, -2], [2, 0]], atol=1e-14)


def test_lambda_vanishes_at_swap_saddle():
    st = rotate_full(CostFunction.joint_matrices([SWAP]), np.eye(2))
    assert st.grad_norm == 0.0
    np.testing.assert_allclose(fd_lambda(st.cost, np.eye(2)), 0, atol=1e-9)


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_lambda_matches_fd_oracle(rng, variant):
    cost = VARIANTS[variant](rng)
    U = random_unitary(cost.n, rng)
    st = rotate_full(cost, U)
    ref = fd_lambda(cost, U)
    assert np.max(np.abs(st.lam - ref)) <= 1e-6 * max(1.0, np.max(np.abs(ref)))
    np.testing.assert_allclose(st.lam, -st.lam.conj().T, atol=1e-13)
    assert np.all(np.diag(st.lam) == 0)


def test_value_matches_evaluate(rng):
    for make in VARIANTS.values():
        cost = make(rng)
        U = random_unitary(cost.n, rng)
        assert abs(rotate_full(cost, U).f_value - evaluate(cost, U)) <= 1e-12 * (1 + abs(evaluate(cost, U)))


def test_optimal_2x2_rotation_diagonalizes():
    cost = CostFunction.joint_matrices([A2])
    st = rotate_full(cost, np.eye(2))
    w, V = np.linalg.eigh(A2)
    v = V[:, 1] * np.sign(V[0, 1])
    rot = GivensRotation(float(v[0].real), float(v[1].real), 0.0)
    apply_givens_update(st, (0, 1), rot)
    W = st.rotated[0]
    assert abs(W[0, 1]) <= 1e-12 and abs(W[1, 0]) <= 1e-12
    assert abs(st.f_value - 3.0) <= 1e-12
    np.testing.assert_allclose(st.lam, 0, atol=1e-12)


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_incremental_matches_full_recompute(rng, variant):
    cost = VARIANTS[variant](rng)
    st = rotate_full(cost, random_unitary(cost.n, rng))
    n = cost.n
    for _ in range(100):
        i, j = sorted(rng.choice(n, 2, replace=False))
        apply_givens_update(st, (int(i), int(j)), random_rotation(rng))
    full = rotate_full(cost, st.U)
    for W, Wf in zip(st.rotated, full.rotated):
        assert np.max(np.abs(W - Wf)) <= 1e-11 * (1 + np.max(np.abs(Wf)))
    assert np.max(np.abs(st.lam - full.lam)) <= 1e-11 * (1 + np.max(np.abs(full.lam)))
    assert abs(st.f_value - full.f_value) <= 1e-11 * (1 + abs(full.f_value))


def test_refresh_policy_keeps_unitarity(rng):
    cost = VARIANTS["matrix"](rng, n=8, L=3)
    st = rotate_full(cost, np.eye(8), refresh_interval=250)
    for _ in range(1000):
        i, j = sorted(rng.choice(8, 2, replace=False))
        apply_givens_update(st, (int(i), int(j)), random_rotation(rng))
    assert st.refreshes == 4
    assert unitarity_error(st.U) <= 1e-9
    assert np.max(np.abs(st.lam - lambda_matrix(st))) <= 1e-11 * (1 + np.max(np.abs(st.lam)))


def test_apply_givens_update_validates(rng):
    st = rotate_full(VARIANTS["matrix"](rng), np.eye(6))
    with pytest.raises(ValueError):
        apply_givens_update(st, (2, 1), GivensRotation.identity())
    with pytest.raises(ValueError):
        apply_givens_update(st, (0, 1), GivensRotation(0.9, 0.9, 0.0))


def test_copy_is_independent(rng):
    st = rotate_full(VARIANTS["matrix"](rng), np.eye(6))
    cp = st.copy()
    apply_givens_update(cp, (0, 1), random_rotation(rng))
    assert not np.allclose(cp.U, st.U)
    assert np.array_equal(st.U, np.eye(6))


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_phase_invariance(rng, variant):
    cost = VARIANTS[variant](rng)
    st = rotate_full(cost, random_unitary(cost.n, rng))
    z = random_phases(cost.n, rng)
    moved = scale_columns(st, z)
    assert abs(moved.f_value - st.f_value) <= 1e-12 * (1 + abs(st.f_value))
    S = np.diag(z)
    assert np.max(np.abs(moved.lam - S.conj().T @ st.lam @ S)) <= 1e-11 * (1 + np.max(np.abs(st.lam)))
    z[0] *= 1.1
    with pytest.raises(ValueError):
        scale_columns(st, z)


def test_off_energy_zero_for_diagonal(rng):
    cost = CostFunction.joint_matrices([np.diag(crandn(rng, 4)) for _ in range(2)])
    st = rotate_full(cost, np.eye(4))
    assert off_energy(st) == 0.0
    st2 = rotate_full(cost, random_unitary(4, rng))
    assert off_energy(st2) > 0.1


def test_trace_form_rejects_non_hermitian(rng):
    with pytest.raises(ValueError, match="Hermitian"):
        CostFunction.trace(crandn(rng, (3, 3, 3, 3)), 2)
    with pytest.raises(ValueError):
        CostFunction.trace(np.eye(3), 3)


def test_squared_term_validation(rng):
    with pytest.raises(ValueError):
        SquaredTerm(crandn(rng, (2, 2, 2, 2)), 1)
    with pytest.raises(ValueError):
        SquaredTerm(crandn(rng, (2, 2)), 3)
    with pytest.raises(ValueError):
        CostFunction.squared([SquaredTerm(crandn(rng, (2, 2)), 1), SquaredTerm(crandn(rng, (3, 3)), 1)])


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_json_round_trip_is_byte_identical(rng, tmp_path, variant):
    cost = VARIANTS[variant](rng)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_problem(cost, p1)
    save_problem(load_problem(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    U = random_unitary(cost.n, rng)
    assert evaluate(load_problem(p1), U) == evaluate(cost, U)


def test_json_pointer_errors(rng):
    good = cost_to_json(VARIANTS["matrix"](rng, n=3, L=2))
    bad = json.loads(json.dumps(good))
    bad["terms"][1]["tensor"]["dims"] = [3, 4]
    with pytest.raises(ValueError, match="^/terms/1/tensor"):
        cost_from_json(bad)
    bad = dict(good, kind="other")
    with pytest.raises(ValueError, match="^/kind"):
        cost_from_json(bad)
    bad = json.loads(json.dumps(good))
    bad["terms"][0]["t"] = "one"
    with pytest.raises(ValueError, match="^/terms/0/t"):
        cost_from_json(bad)
    tr = cost_to_json(VARIANTS["trace4"](rng, n=2))
    tr["B"]["data"][1] = [5.0, 3.0]
    with pytest.raises(ValueError, match="^/B"):
        cost_from_json(tr)
