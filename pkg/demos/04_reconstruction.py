# %% [markdown]
# # Reconstruction and preconditioning by a controller
#
# A vector is recovered from its coefficients by inverting S_C with the
# frame algorithm (Richardson) or conjugate gradients.

# %%
import numpy as np

from ckframe import FrameSystem, InstanceSpec, ModuleOperator, ModuleVector, gen_instance
from ckframe import precondition_report, reconstruct

inst = gen_instance(InstanceSpec(d=2, n=3, m=5, seed=3))
rng = np.random.default_rng(1)
f = ModuleVector(rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6)))
for method in ("richardson", "cg"):
    f_hat, st = reconstruct(inst.F, inst.C, f, method=method, tol=1e-10)
    print(method, st.iterations, "iterations, error", (f_hat - f).norm() / f.norm())

# %% [markdown]
# With S = diag(1, 4), the controller C = S^{-1} makes S_C the identity and
# Richardson converges in one step.

# %%
F = FrameSystem(np.array([[[1, 0]], [[0, 2]]], dtype=complex))
rep = precondition_report(F, ModuleOperator(np.diag([1.0, 0.25]).astype(complex), 1))
print(rep.to_dict())
