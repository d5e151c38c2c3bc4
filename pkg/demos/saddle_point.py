"""A stationary point that is not a maximizer.

For A = [[0, 1], [1, 0]] the gradient vanishes at U = I, yet rotating by
45 degrees doubles the cost. Gradient-driven pair selection has nothing to
act on and reports the stall; plain cyclic Jacobi looks at every pair and
escapes in one rotation.
"""
import numpy as np

from unijadi import CostFunction, SolverConfig, rotate_full, solve
from unijadi.rotations import build_gamma, leading_eigvec3

A = np.array([[0, 1], [1, 0]], dtype=complex)
cost = CostFunction.joint_matrices([A])
st = rotate_full(cost, np.eye(2))
G = build_gamma(st, (0, 1))
lam1, w, gap = leading_eigvec3(G)
print(f"||Lambda(I)|| = {st.grad_norm}, Gamma =\n{G.gamma}\nlargest eigenvalue {lam1} vs Gamma_11 = {G.gamma[0, 0]}")

for strategy in ("gradient-max", "cyclic-threshold", "cyclic"):
    res = solve(cost, np.eye(2), SolverConfig(strategy=strategy))
    print(f"{strategy:>16}: {res.status.value:<16} f = {res.f_final:g}  saddle pair = {res.saddle_pair}")
