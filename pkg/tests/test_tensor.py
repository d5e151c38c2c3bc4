import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unijadi import tensor as tc
from helpers import crandn


def test_contract_vector_picks_entry():
    T = np.zeros((2, 2, 2), dtype=complex)
    T[0, 1, 1] = 1j
    R = tc.contract_vector(T, 1, np.array([0.0, 1.0]), conjugate=True)
    assert R.shape == (2, 2)
    assert R[0, 1] == 1j
    assert np.count_nonzero(R) == 1


def test_contract_vector_matches_summation(rng):
    T = crandn(rng, (3, 4, 5))
    v = crandn(rng, 4)
    R = tc.contract_vector(T, 1, v, conjugate=True)
    ref = np.zeros((3, 5), dtype=complex)
    for a, b, c in itertools.product(range(3), range(4), range(5)):
        ref[a, c] += T[a, b, c] * np.conj(v[b])
    np.testing.assert_allclose(R, ref, atol=1e-13)


def test_contract_vector_rejects_bad_length(rng):
    with pytest.raises(ValueError):
        tc.contract_vector(crandn(rng, (3, 3)), 0, np.ones(4))
    with pytest.raises(ValueError):
        tc.contract_vector(crandn(rng, (3, 3)), 2, np.ones(3))


def test_contract_matrix_order2_is_sandwich(rng):
    T = crandn(rng, (4, 4))
    M = crandn(rng, (4, 4))
    R = tc.contract_matrix(tc.contract_matrix(T, 0, M), 1, M)
    np.testing.assert_allclose(R, M @ T @ M.T, atol=1e-12)


def test_as_scalar_and_as_tensor():
    assert tc.as_scalar(np.array([[2.5 + 1j]])) == 2.5 + 1j
    with pytest.raises(ValueError):
        tc.as_scalar(np.ones(2))
    with pytest.raises(ValueError):
        tc.as_tensor([1.0, np.nan])
    src = np.ones(3)
    out = tc.as_tensor(src, copy=True)
    out[0] = 5
    assert src[0] == 1


def test_subtensor_restrict_matches_indexing(rng):
    T = crandn(rng, (4, 4, 4))
    S = tc.subtensor_restrict(T, (1, 3))
    idx = (1, 3)
    for a, b, c in itertools.product(range(2), repeat=3):
        assert S[a, b, c] == T[idx[a], idx[b], idx[c]]
    with pytest.raises(ValueError):
        tc.subtensor_restrict(T, (3, 1))


def test_semi_symmetrize_order3(rng):
    A = crandn(rng, (3, 3, 3))
    T = tc.semi_symmetrize(A, 1)
    np.testing.assert_allclose(T, (A + A.transpose(0, 2, 1)) / 2, atol=1e-15)
    assert tc.is_semi_symmetric(T, 1)


def test_semi_symmetrize_order4(rng):
    B = crandn(rng, (3, 3, 3, 3))
    S = tc.semi_symmetrize(B, 2)
    ref = (B + B.transpose(0, 1, 3, 2) + B.transpose(1, 0, 2, 3) + B.transpose(1, 0, 3, 2)) / 4
    np.testing.assert_allclose(S, ref, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t=st.integers(0, 3))
def test_semi_symmetrize_preserves_form(seed, t):
    r = np.random.default_rng(seed)
    A = crandn(r, (3, 3, 3))
    u = crandn(r, 3)
    assert abs(tc.form_value(A, t, u) - tc.form_value(tc.semi_symmetrize(A, t), t, u)) <= 1e-12 * (
        1 + np.abs(A).sum() * np.linalg.norm(u) ** 3
    )


def test_square_is_hermitian_and_matches_form(rng):
    A = crandn(rng, (3, 3, 3))
    B = tc.tensor_square_to_hermitian(A, 1)
    assert B.ndim == 6
    assert tc.hermitian_check(B, 3, tol=1e-14)
    for _ in range(20):
        u = crandn(rng, 3)
        u /= np.linalg.norm(u)
        assert abs(tc.form_value(B, 3, u) - abs(tc.form_value(A, 1, u)) ** 2) <= 1e-12


def test_square_matrix_case_2x2_identity(rng):
    A = crandn(rng, (3, 3))
    B = tc.tensor_square_to_hermitian(A, 1)
    u = crandn(rng, 3)
    assert abs(tc.form_value(B, 2, u) - abs(np.conj(u) @ A @ u) ** 2) <= 1e-12 * np.linalg.norm(u) ** 4 * 100


def test_hermitian_check_detects_asymmetry(rng):
    B = crandn(rng, (2, 2, 2, 2))
    assert not tc.hermitian_check(B, 2)
    with pytest.raises(ValueError):
        tc.hermitian_check(B, 3)


def test_rotate_tensor_diagonal_is_form(rng):
    from unijadi.unitary import random_unitary

    A = crandn(rng, (4, 4, 4))
    U = random_unitary(4, rng)
    W = tc.rotate_tensor(A, 1, U)
    d = tc.diagonal(W)
    for p in range(4):
        assert abs(d[p] - tc.form_value(A, 1, U[:, p])) <= 1e-12


def test_rotate_tensor_matrix_is_conjugation(rng):
    from unijadi.unitary import random_unitary

    A = crandn(rng, (5, 5))
    U = random_unitary(5, rng)
    np.testing.assert_allclose(tc.rotate_tensor(A, 1, U), U.conj().T @ A @ U, atol=1e-12)


def test_json_round_trip(rng):
    T = crandn(rng, (2, 3, 2))
    obj = json.loads(json.dumps(tc.tensor_to_json(T)))
    np.testing.assert_array_equal(tc.tensor_from_json(obj), T)


@pytest.mark.parametrize(
    "obj",
    [
        {"order": 2, "dims": [2], "data": []},
        {"order": 1, "dims": [2], "data": [[1, 0]]},
        {"dims": [1], "data": [[1, 0]]},
        {"order": 1, "dims": [1], "data": [[1, 0, 0]]},
    ],
)
def test_json_schema_errors(obj):
    with pytest.raises(ValueError):
        tc.tensor_from_json(obj)
