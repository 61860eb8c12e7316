# %% [markdown]
# # Vectors and operators over a matrix algebra
#
# Elements of A^n with A = M_d(C) are stored as d x nd blocks.  The inner
# product takes values in A, and operators act by right multiplication.

# %%
import numpy as np

from ckframe import ModuleOperator, ModuleVector, douglas_solve, inner_product, loewner_leq, op_sqrt
from ckframe.core import douglas_mu_bisect, op_compose

rng = np.random.default_rng(0)
d, n = 2, 3
x = ModuleVector(rng.standard_normal((d, n * d)) + 1j * rng.standard_normal((d, n * d)))
print("<x, x> =\n", np.round(inner_product(x, x), 3))
print("module norm", x.norm())

# %% [markdown]
# Positive operators have square roots, and the Loewner order is decided on
# eigenvalues of the difference.

# %%
X = rng.standard_normal((n * d, n * d))
P = ModuleOperator(X @ X.T, d)
R = op_sqrt(P)
print("sqrt error", np.abs((R @ R).matrix - P.matrix).max())
print("P <= 2P:", loewner_leq(P.matrix, 2 * P.matrix))

# %% [markdown]
# Douglas factorisation: when R(T') sits inside R(T) the equation T X = T'
# has a minimal-norm solution, and mu_min = ||X||^2 is the least constant in
# T' T'* <= mu T T*.  A bisection on the Loewner predicate agrees.

# %%
T = ModuleOperator(rng.standard_normal((n * d, 3)) @ rng.standard_normal((3, n * d)), d)
Tp = op_compose(T, ModuleOperator(rng.standard_normal((n * d, n * d)), d))
sol = douglas_solve(Tp, T)
print("mu_min", sol.mu_min, "bisection", douglas_mu_bisect(Tp, T, tol=1e-12))
