# %% [markdown]
# # Optimal frame bounds from the Gram matrix
#
# The classical three-vector frame {(1,0), (0,1), (1,1)} has frame operator
# [[2,1],[1,2]], so its optimal bounds are its eigenvalues 1 and 3.

# %%
import numpy as np

from ckframe import FrameSystem, ModuleOperator, optimal_bounds, quadratic_form_check

F = FrameSystem(np.array([[[1, 0]], [[0, 1]], [[1, 1]]], dtype=complex))
rep = optimal_bounds(F, "frame")
print(rep.lowerA, rep.upperB)

# %% [markdown]
# Sampling can only refute a bound.  The optimal pair survives, while a
# slightly larger lower bound is caught.

# %%
print(quadratic_form_check(F, "frame", 1.0, 3.0, samples=200, seed=1).passed)
print(quadratic_form_check(F, "frame", 1.05, 3.0, samples=200, seed=1).passed)

# %% [markdown]
# A controller C commuting with S reshapes the bounds.  K-frames measure the
# lower bound against K K* instead of the identity.

# %%
C = ModuleOperator(np.array([[1.5, -0.5], [-0.5, 1.5]], dtype=complex), 1)
K = ModuleOperator(np.array([[1, 0], [0, 0]], dtype=complex), 1)
for kind in ("controlled", "kframe", "controlled_kframe"):
    r = optimal_bounds(F, kind, C, K)
    print(kind, r.lowerA, r.upperB, "tight" if r.tight else "")
