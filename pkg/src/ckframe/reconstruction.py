"""Iterative inversion of (controlled) frame operators and reconstruction.

Solving ``S x = b`` for an operator acting by right multiplication means
``X S = B`` on the flattenings, so each of the ``d`` rows of ``X`` solves
an independent Hermitian system with matrix ``S^T = conj(S)``.  Residuals
are measured in the module norm ``||x|| = ||<x, x>||^{1/2}``, which for a
flattened vector is its largest singular value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    ModuleOperator,
    ModuleVector,
    ShapeError,
    adjoint,
    hermitian_defect,
    spectral_norm,
)
from .frames import FrameSystem, analysis, controlled_frame_op, gram_commutator, synthesis

EPS = np.finfo(float).eps


@dataclass
class IterationStats:
    iterations: int
    final_relative_error: float
    contraction_estimate: float
    condition_number: float
    converged: bool = True


def spectral_bounds(S: ModuleOperator, tol: float = 1e-10) -> tuple[float, float]:
    """``(A, B)``: extreme eigenvalues of a Hermitian positive definite ``S``."""
    mat = S.matrix
    scale = max(1.0, spectral_norm(mat))
    if hermitian_defect(mat) > tol * scale:
        raise DomainError(f"operator is not Hermitian (defect {hermitian_defect(mat):.3e})")
    w = np.linalg.eigvalsh((mat + adjoint(mat)) / 2)
    if w[0] <= tol * scale:
        raise DomainError(f"operator is not positive definite (lambda_min={w[0]:.3e})")
    return float(w[0]), float(w[-1])


def _check_rhs(S: ModuleOperator, b: ModuleVector) -> None:
    if b.flat.shape != (S.d, S.size):
        raise ShapeError(f"right-hand side of shape {b.flat.shape} for an operator on "
                         f"A^{S.n} over M_{S.d}")


def richardson_invert(
    S: ModuleOperator,
    b: ModuleVector,
    relax="auto",
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> tuple[ModuleVector, IterationStats]:
    """Frame algorithm ``x_{k+1} = x_k + relax (b - S x_k)``.

    Parameters
    ----------
    S : ModuleOperator
        Hermitian positive definite.
    b : ModuleVector
    relax : float or "auto"
        ``"auto"`` uses ``2 / (A + B)`` with ``(A, B)`` the spectral bounds
        of ``S``, giving contraction ``(B - A) / (B + A)``.
    tol : float
        Stop when ``||b - S x|| <= tol ||b||``.
    max_iter : int

    Returns
    -------
    x : ModuleVector
    stats : IterationStats
        ``converged`` is False if ``max_iter`` ran out first.
    """
    _check_rhs(S, b)
    A, B = spectral_bounds(S)
    if relax == "auto":
        relax = 2.0 / (A + B)
    relax = float(relax)
    rho = max(abs(1 - relax * A), abs(1 - relax * B))
    kappa = B / A
    b_norm = b.norm()
    x = np.zeros_like(b.flat)
    if b_norm == 0.0:
        return ModuleVector(x), IterationStats(0, 0.0, rho, kappa)
    r = b.flat.copy()
    k = 0
    rel = 1.0
    while rel > tol and k < max_iter:
        x = x + relax * r
        r = b.flat - x @ S.matrix
        k += 1
        rel = spectral_norm(r) / b_norm
    return ModuleVector(x), IterationStats(k, rel, rho, kappa, converged=rel <= tol)


def _cg_row(H: np.ndarray, rhs: np.ndarray, stop: float, max_iter: int):
    """Conjugate gradients for Hermitian PD ``H x = rhs``.

    Each new direction is H-orthogonalised against all previous ones, which
    keeps the exact-arithmetic property of terminating within ``len(rhs)``
    steps even when rounding would otherwise erode conjugacy.
    """
    x = np.zeros_like(rhs)
    r = rhs.copy()
    dirs, hdirs, curv = [], [], []
    k = 0
    while np.linalg.norm(r) > stop and k < max_iter:
        p = r.copy()
        for q, hq, c in zip(dirs, hdirs, curv):
            p -= (np.vdot(hq, p) / c) * q
        Hp = H @ p
        c = np.vdot(p, Hp).real
        if c <= 0.0:
            break
        alpha = np.vdot(p, r) / c
        x += alpha * p
        r -= alpha * Hp
        dirs.append(p)
        hdirs.append(Hp)
        curv.append(c)
        k += 1
    return x, k


def cg_invert(
    S: ModuleOperator,
    b: ModuleVector,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> tuple[ModuleVector, IterationStats]:
    """Conjugate gradients on each flattened row of ``X S = B``.

    Each row is stopped at ``tol ||b|| / sqrt(d)`` in the Euclidean norm,
    which bounds the module-norm residual by ``tol ||b||``.  ``iterations``
    reports the largest per-row count.  Default ``max_iter`` is ``10 nd``.
    """
    _check_rhs(S, b)
    A, B = spectral_bounds(S)
    kappa = B / A
    rho = (np.sqrt(kappa) - 1) / (np.sqrt(kappa) + 1)
    max_iter = 10 * S.size if max_iter is None else max_iter
    b_norm = b.norm()
    if b_norm == 0.0:
        return ModuleVector(np.zeros_like(b.flat)), IterationStats(0, 0.0, rho, kappa)
    H = S.matrix.T
    stop = tol * b_norm / np.sqrt(S.d)
    rows, counts = [], []
    for row in b.flat:
        x, k = _cg_row(H, row, stop, max_iter)
        rows.append(x)
        counts.append(k)
    X = np.array(rows)
    rel = spectral_norm(b.flat - X @ S.matrix) / b_norm
    return ModuleVector(X), IterationStats(max(counts), rel, rho, kappa, converged=rel <= tol)


_SOLVERS = {"cg": cg_invert, "richardson": richardson_invert}


def reconstruct(
    F: FrameSystem,
    C: ModuleOperator | None,
    f: ModuleVector,
    method: str = "cg",
    tol: float = 1e-10,
) -> tuple[ModuleVector, IterationStats]:
    """Recover ``f`` from its analysis coefficients.

    Forms ``b = sum_j <f, psi_j> C psi_j = S_C f`` and solves ``S_C x = b``.
    The solver runs at residual tolerance ``tol / kappa(S_C)`` so that the
    reconstruction error is at most ``tol ||f||``.
    """
    if method not in _SOLVERS:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(_SOLVERS)}")
    if C is None:
        C = ModuleOperator.identity(F.d, F.n)
    SC = controlled_frame_op(F, C)
    gap = gram_commutator(F, C)
    if gap > 1e-9:
        raise DomainError(f"S_C is not self-adjoint (C does not commute with S, gap {gap:.3e})")
    SC = ModuleOperator((SC.matrix + adjoint(SC.matrix)) / 2, F.d)
    A, B = spectral_bounds(SC)
    b = synthesis(F, C, analysis(F, f))
    inner_tol = max(tol * A / B, 10 * EPS)
    return _SOLVERS[method](SC, b, tol=inner_tol)


@dataclass
class PreconditionReport:
    kappa_S: float
    kappa_SC: float
    contraction_S: float
    contraction_SC: float
    iterations_S: int
    iterations_SC: int
    tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def precondition_report(
    F: FrameSystem, C: ModuleOperator, seed: int = 0, tol: float = 1e-10
) -> PreconditionReport:
    """Compare Richardson inversion of ``S`` and of ``S_C = C S``.

    Both runs use ``relax="auto"`` on the right-hand sides ``S f`` and
    ``S_C f`` for the same seeded random ``f``.
    """
    S = F.gram_op()
    if gram_commutator(F, C) > 1e-9:
        raise DomainError("C does not commute with S; S_C is not self-adjoint")
    SC = controlled_frame_op(F, C)
    SC = ModuleOperator((SC.matrix + adjoint(SC.matrix)) / 2, F.d)
    rng = np.random.Generator(np.random.Philox(seed))
    shape = (F.d, F.n * F.d)
    f = ModuleVector(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    _, st_s = richardson_invert(S, S(f), tol=tol)
    _, st_c = richardson_invert(SC, SC(f), tol=tol)
    return PreconditionReport(
        kappa_S=st_s.condition_number,
        kappa_SC=st_c.condition_number,
        contraction_S=st_s.contraction_estimate,
        contraction_SC=st_c.contraction_estimate,
        iterations_S=st_s.iterations,
        iterations_SC=st_c.iterations,
        tol=tol,
    )
