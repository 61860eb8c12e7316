import math

import numpy as np
import pytest

from ckframe.core import DomainError, ModuleOperator, ModuleVector
from ckframe.frames import FrameSystem
from ckframe.instances import InstanceSpec, gen_instance
from ckframe.reconstruction import (
    cg_invert,
    precondition_report,
    reconstruct,
    richardson_invert,
)

from conftest import cgauss, classical_frame, op


def dense_solve(S: ModuleOperator, b: ModuleVector) -> np.ndarray:
    # X S = B  <=>  S^T X^T = B^T
    return np.linalg.solve(S.matrix.T, b.flat.T).T


def random_pd(rng, d, n):
    X = cgauss(rng, (n * d, n * d))
    return ModuleOperator(X @ X.conj().T + 0.1 * np.eye(n * d), d)


def test_richardson_identity_one_step(rng):
    b = ModuleVector(cgauss(rng, (2, 4)))
    x, st = richardson_invert(ModuleOperator.identity(2, 2), b)
    assert st.iterations == 1 and st.converged
    np.testing.assert_allclose(x.flat, b.flat)


def test_richardson_zero_rhs():
    x, st = richardson_invert(op([[2.0, 1.0], [1.0, 2.0]]), ModuleVector.zeros(1, 2))
    assert st.iterations <= 1 and np.all(x.flat == 0)


def test_richardson_contraction_example(rng):
    S = op([[2.0, 1.0], [1.0, 2.0]])  # spectrum {1, 3}
    b = ModuleVector(cgauss(rng, (1, 2)))
    tol = 1e-10
    _, st = richardson_invert(S, b, relax=0.5, tol=tol)
    assert st.contraction_estimate == pytest.approx(0.5)
    assert st.iterations <= math.ceil(math.log(tol) / math.log(0.5))


def test_richardson_per_step_ratio(rng):
    S = random_pd(rng, 2, 2)
    w = np.linalg.eigvalsh(S.matrix)
    rho = (w[-1] - w[0]) / (w[-1] + w[0])
    b = ModuleVector(cgauss(rng, (2, 4)))
    x_true = dense_solve(S, b)
    relax = 2 / (w[0] + w[-1])
    x = np.zeros_like(b.flat)
    err = np.linalg.norm(x - x_true)
    for _ in range(30):
        x = x + relax * (b.flat - x @ S.matrix)
        new = np.linalg.norm(x - x_true)
        assert new <= (rho + 1e-6) * err + 1e-14
        err = new


def test_richardson_non_pd_raises():
    with pytest.raises(DomainError):
        richardson_invert(op(np.diag([1.0, -1.0])), ModuleVector.zeros(1, 2))
    with pytest.raises(DomainError):
        cg_invert(op([[1.0, 2.0], [0.0, 1.0]]), ModuleVector.zeros(1, 2))


def test_richardson_max_iter_reports_nonconvergence(rng):
    S = op(np.diag([1.0, 1000.0]))
    _, st = richardson_invert(S, ModuleVector(cgauss(rng, (1, 2))), max_iter=5)
    assert not st.converged and st.iterations == 5


def test_cg_small_examples(rng):
    b = ModuleVector(cgauss(rng, (1, 2)))
    _, st = cg_invert(op(np.diag([1.0, 2.0])), b)
    assert st.iterations <= 2
    _, st = cg_invert(ModuleOperator.identity(1, 2), b)
    assert st.iterations == 1


def test_solvers_match_dense(rng):
    for _ in range(100):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        if n * d > 12:
            n = 12 // d
        S = random_pd(rng, d, n)
        b = ModuleVector(cgauss(rng, (d, n * d)))
        ref = dense_solve(S, b)
        scale = np.linalg.norm(ref)
        x, st = cg_invert(S, b, tol=1e-12)
        assert np.linalg.norm(x.flat - ref) <= 1e-9 * scale
        assert st.iterations <= n * d
        w = np.linalg.eigvalsh(S.matrix)
        if w[-1] / w[0] < 1e3:
            x, _ = richardson_invert(S, b, tol=1e-13, max_iter=200_000)
            assert np.linalg.norm(x.flat - ref) <= 1e-9 * scale


def test_cg_rowwise_equals_whole_system(rng):
    S = random_pd(rng, 3, 2)
    b = ModuleVector(cgauss(rng, (3, 6)))
    x, _ = cg_invert(S, b, tol=1e-13)
    whole = np.linalg.solve(np.kron(np.eye(3), S.matrix.T), b.flat.reshape(-1)).reshape(3, 6)
    np.testing.assert_allclose(x.flat, whole, atol=1e-10)


def test_reconstruct_parseval():
    F = FrameSystem.standard_basis(2, 2)
    f = ModuleVector(cgauss(np.random.default_rng(0), (2, 4)))
    f_hat, st = reconstruct(F, None, f, method="richardson")
    np.testing.assert_allclose(f_hat.flat, f.flat, atol=1e-14)
    assert st.iterations <= 1


def test_reconstruct_three_vectors(three_vectors, rng):
    f = ModuleVector(cgauss(rng, (1, 2)))
    for method in ("cg", "richardson"):
        f_hat, _ = reconstruct(three_vectors, ModuleOperator.identity(1, 2), f, method=method)
        assert (f_hat - f).norm() <= 1e-9 * f.norm()


def test_reconstruct_degenerate_raises(three_vectors):
    with pytest.raises(DomainError):
        reconstruct(three_vectors, op([[2.0, 0.5], [0.5, 1.0]]), ModuleVector.zeros(1, 2))
    deficient = classical_frame([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(DomainError):
        reconstruct(deficient, None, ModuleVector.zeros(1, 3))


def test_reconstruct_generated(rng):
    for seed in range(30):
        inst = gen_instance(InstanceSpec(d=2, n=2, m=3 + seed % 2, seed=seed))
        f = ModuleVector(cgauss(rng, (2, 4)))
        f_hat, st = reconstruct(inst.F, inst.C, f, tol=1e-10)
        assert (f_hat - f).norm() <= 1e-9 * f.norm()


def test_preconditioning_identity_and_scalar(three_vectors):
    I = ModuleOperator.identity(1, 2)
    rep = precondition_report(three_vectors, I)
    assert rep.kappa_S == rep.kappa_SC and rep.iterations_S == rep.iterations_SC
    rep = precondition_report(three_vectors, 7.0 * I)
    assert rep.kappa_SC == pytest.approx(rep.kappa_S)


def test_preconditioning_diagonal_example():
    F = classical_frame([[1, 0], [0, 2]])  # G = diag(1, 4)
    rep = precondition_report(F, op(np.diag([1.0, 0.25])))
    assert rep.kappa_S == pytest.approx(4.0) and rep.kappa_SC == pytest.approx(1.0)
    assert rep.iterations_SC <= 2 < rep.iterations_S
    assert rep.contraction_S == pytest.approx(0.6)
