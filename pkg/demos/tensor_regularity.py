"""Tensor problems with a planted diagonal core.

An order-3 core with two zero diagonal entries has a flat direction at the
optimum, and the regularity report points at the offending pair. Order-4
trace forms follow a sign rule on the diagonal.
"""
import numpy as np

from unijadi import SolverConfig, solve
from unijadi.diagnostics import regularity_check
from unijadi.problems import gen_diagonal_tensor3, gen_diagonal_trace4

for vals in ([1.0, 2.0, 3.0, 4.0], [1.0, 0.0, 0.0, 2.0]):
    cost, gt = gen_diagonal_tensor3(4, vals, seed=0)
    res = solve(cost, np.eye(4), SolverConfig(strategy="cyclic", grad_tol=1e-10))
    rep = regularity_check(cost, gt.U_star)
    print(f"order-3 core {vals}: solver f = {res.f_final:.12f} (f* = {gt.f_star}), "
          f"rank {rep.rank}/{rep.max_rank}, singular pairs {rep.singular_pairs}")

for vals in ([1.0, 2.0, 3.0, 4.0], [-1.0, 2.0, 3.0, 4.0], [-3.0, 2.0, 3.0, 4.0]):
    cost, gt = gen_diagonal_trace4(4, vals, seed=1)
    rep = regularity_check(cost, gt.U_star)
    print(f"trace form {vals}: predicted regular {gt.expected_regular}, "
          f"all blocks negative definite {rep.all_negative_definite}")
