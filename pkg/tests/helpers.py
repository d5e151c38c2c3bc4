"""Random problem builders and independent oracles shared by the tests."""
import numpy as np
from scipy.linalg import expm

from unijadi import CostFunction, SquaredTerm
from unijadi.cost import evaluate


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def matrix_cost(rng, n=6, L=3):
    return CostFunction.joint_matrices([crandn(rng, (n, n)) for _ in range(L)],
                                       alphas=rng.uniform(0.5, 2.0, L))


def tensor3_cost(rng, n=5):
    # mixes t = 0..3 plus a vector and a matrix term so every block path runs
    terms = [SquaredTerm(crandn(rng, (n, n, n)), t, a) for t, a in [(1, 1.0), (0, 0.7), (2, 1.3), (3, 0.4)]]
    terms.append(SquaredTerm(crandn(rng, n), 1, 0.9))
    terms.append(SquaredTerm(crandn(rng, (n, n)), 2, 0.6))
    return CostFunction.squared(terms)


def trace4_cost(rng, n=4):
    X = crandn(rng, (n, n, n, n))
    return CostFunction.trace(0.5 * (X + X.transpose(2, 3, 0, 1).conj()), 2)


VARIANTS = {"matrix": matrix_cost, "tensor3": tensor3_cost, "trace4": trace4_cost}


def fd_lambda(cost, U, step=1e-5):
    """``Lambda(U)`` from central differences of ``f(U expm(t Omega))``.

    Uses ``d f = Re tr(Omega^H Lambda)`` on the two real directions of each pair.
    """
    n = cost.n
    lam = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            d = []
            for Om in (np.zeros((n, n)), np.zeros((n, n), dtype=complex)):
                if Om.dtype == complex:
                    Om[i, j] = Om[j, i] = 1j
                else:
                    Om[i, j], Om[j, i] = 1.0, -1.0
                fp = evaluate(cost, U @ expm(step * Om))
                fm = evaluate(cost, U @ expm(-step * Om))
                d.append((fp - fm) / (2 * step))
            lam[i, j] = (d[0] + 1j * d[1]) / 2
            lam[j, i] = -np.conj(lam[i, j])
    return lam
