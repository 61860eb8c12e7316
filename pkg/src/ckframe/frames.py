"""Frames, K-frames and controlled frames on ``A^n`` and their optimal bounds.

Every frame inequality here compares A-valued quadratic forms in ``f``.
Writing ``F`` for the flattening of ``f``, each form is ``F Q F^*`` for an
``nd x nd`` matrix ``Q``, and "``F Q1 F^* <= F Q2 F^*`` for all f" is the
same statement as ``Q1 <= Q2``.  So the bounds reduce to eigenvalue problems
on the Gram matrix ``G = sum_j Psi_j^* Psi_j``:

===================  ===========================  ===================
kind                 middle term                  lower form
===================  ===========================  ===================
frame                ``G``                        ``I``
bessel               ``G C`` (or ``G``)           --
kframe               ``G``                        ``K^* K``
controlled           ``G C``                      ``I``
controlled_kframe    ``G C``                      ``K^* C K``
===================  ===========================  ===================

``G C`` is only Hermitian when ``C`` commutes with ``G``; otherwise the
controlled middle term is not self-adjoint and the instance is reported
as degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOL,
    DomainError,
    ModuleOperator,
    ModuleVector,
    ShapeError,
    UsageError,
    adjoint,
    bounded_below_margin,
    hermitian_defect,
    is_positive,
    loewner_bisect,
    loewner_holds,
    loewner_margin,
    op_sqrt,
    spectral_norm,
)

KINDS = ("frame", "bessel", "kframe", "controlled", "controlled_kframe")

# relative gap (B - A) / B below which a frame counts as tight
TIGHT_GAP = 1e-9
# "A > 0" decisions use this relative threshold on A ||M|| / ||P||
DECISION_THRESHOLD = 1e-6


class FrameSystem:
    """A finite family ``psi_1..psi_m`` in ``A^n`` with its cached Gram matrix.

    ``elements`` is an ``(m, d, nd)`` complex array of flattened vectors.
    """

    def __init__(self, elements):
        if isinstance(elements, np.ndarray) and elements.ndim == 3:
            arr = np.array(elements, dtype=complex)
        else:
            arr = np.array([e.flat if isinstance(e, ModuleVector)
                            else ModuleVector(e).flat for e in elements], dtype=complex)
        if arr.ndim != 3 or arr.shape[2] % arr.shape[1]:
            raise ShapeError(f"frame elements must stack to (m, d, nd), got {arr.shape}")
        arr.setflags(write=False)
        self.psi = arr
        gram = np.einsum("jak,jai->ki", arr.conj(), arr)
        gram = (gram + adjoint(gram)) / 2.0
        gram.setflags(write=False)
        self.gram = gram

    @classmethod
    def from_stacked(cls, stacked: np.ndarray, d: int) -> "FrameSystem":
        """From the ``md x nd`` matrix whose j-th block row is ``Psi_j``."""
        stacked = np.asarray(stacked, dtype=complex)
        m = stacked.shape[0] // d
        return cls(stacked.reshape(m, d, stacked.shape[1]))

    @classmethod
    def from_blocks(cls, vectors) -> "FrameSystem":
        """From a list of vectors, each a list of ``n`` ``d x d`` blocks."""
        return cls([ModuleVector.from_blocks(v) for v in vectors])

    @classmethod
    def standard_basis(cls, d: int, n: int) -> "FrameSystem":
        eye = np.eye(n * d, dtype=complex)
        return cls.from_stacked(eye, d)

    @property
    def m(self) -> int:
        return self.psi.shape[0]

    @property
    def d(self) -> int:
        return self.psi.shape[1]

    @property
    def n(self) -> int:
        return self.psi.shape[2] // self.psi.shape[1]

    def __len__(self) -> int:
        return self.m

    def __getitem__(self, j: int) -> ModuleVector:
        return ModuleVector(self.psi[j])

    def stacked(self) -> np.ndarray:
        return self.psi.reshape(self.m * self.d, -1)

    def gram_op(self) -> ModuleOperator:
        return ModuleOperator(self.gram, self.d)

    def mapped(self, T: ModuleOperator) -> "FrameSystem":
        """The family ``{T psi_j}``."""
        _check_frame_op(self, T)
        return FrameSystem(self.psi @ T.matrix)

    def append(self, vector: ModuleVector) -> "FrameSystem":
        return FrameSystem(np.concatenate([self.psi, vector.flat[None]], axis=0))


def _check_frame_op(F: FrameSystem, T: ModuleOperator | None) -> None:
    if T is not None and (T.d, T.n) != (F.d, F.n):
        raise ShapeError(f"operator (d, n) = {(T.d, T.n)} does not act on frame {(F.d, F.n)}")


def _check_frame_vec(F: FrameSystem, f: ModuleVector) -> None:
    if (f.d, f.n) != (F.d, F.n):
        raise ShapeError(f"vector (d, n) = {(f.d, f.n)} vs frame {(F.d, F.n)}")


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """An element ``{c_j}`` of ``l^2(A)`` with finitely many terms."""

    coeffs: np.ndarray  # (m, d, d)

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"coefficients must have shape (m, d, d), got {arr.shape}")
        object.__setattr__(self, "coeffs", arr)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    def inner(self, other: "CoefficientSequence") -> np.ndarray:
        """``<{a_j}, {b_j}> = sum_j a_j b_j^*``."""
        if other.coeffs.shape != self.coeffs.shape:
            raise ShapeError("coefficient sequences of different shape")
        return np.einsum("jab,jcb->ac", self.coeffs, other.coeffs.conj())

    def norm(self) -> float:
        return float(np.sqrt(spectral_norm(self.inner(self))))


def analysis(F: FrameSystem, f: ModuleVector) -> CoefficientSequence:
    """``f -> {<f, psi_j>}``."""
    _check_frame_vec(F, f)
    return CoefficientSequence(np.einsum("ak,jbk->jab", f.flat, F.psi.conj()))


def synthesis(F: FrameSystem, C: ModuleOperator | None, c: CoefficientSequence) -> ModuleVector:
    """``{c_j} -> sum_j c_j (C psi_j)``; pass ``C=None`` for the identity."""
    if c.m != F.m or c.d != F.d:
        raise ShapeError(f"{c.m} coefficients of size {c.d} for a frame of {F.m} in d={F.d}")
    _check_frame_op(F, C)
    psi = F.psi if C is None else F.psi @ C.matrix
    return ModuleVector(np.einsum("jab,jbk->ak", c.coeffs, psi))


def frame_op(F: FrameSystem) -> ModuleOperator:
    """Frame operator ``S f = sum_j <f, psi_j> psi_j``; flattened it is ``G``."""
    return F.gram_op()


def check_controller(C: ModuleOperator, tol: float = DEFAULT_TOL) -> None:
    """Raise :class:`DomainError` unless ``C`` is positive and invertible."""
    if not is_positive(C.matrix, tol):
        raise DomainError("controller C is not positive")
    if bounded_below_margin(C) <= tol * max(1.0, spectral_norm(C.matrix)):
        raise DomainError("controller C is not invertible")


def controlled_frame_op(F: FrameSystem, C: ModuleOperator, tol: float = DEFAULT_TOL) -> ModuleOperator:
    """``S_C f = sum_j <f, psi_j> C psi_j``, i.e. ``C S``; flattened ``G C``."""
    _check_frame_op(F, C)
    check_controller(C, tol)
    return ModuleOperator(F.gram @ C.matrix, F.d)


def gram_commutator(F: FrameSystem, C: ModuleOperator) -> float:
    """``||G C - C G||`` relative to ``max(1, ||G|| ||C||)``."""
    G, Cm = F.gram, C.matrix
    return spectral_norm(G @ Cm - Cm @ G) / max(1.0, spectral_norm(G) * spectral_norm(Cm))


# ---------------------------------------------------------------------------
# bounds


@dataclass
class BoundsReport:
    kind: str
    lowerA: float | None
    upperB: float | None
    holds: bool
    tight: bool = False
    parseval: bool = False
    degenerate: bool = False
    reason: str | None = None
    certified: bool | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lowerA": self.lowerA,
            "upperB": self.upperB,
            "holds": self.holds,
            "tight": self.tight,
            "parseval": self.parseval,
            "degenerate": self.degenerate,
            "reason": self.reason,
            "certified": self.certified,
        }


def pencil_lower(P: np.ndarray, M: np.ndarray, tol: float = DEFAULT_TOL) -> float | None:
    """Largest ``A >= 0`` with ``P >= A M`` for Hermitian PSD ``P``, ``M``.

    Whitens ``P`` on its range: if ``M`` reaches outside ``R(P)`` the answer
    is 0, otherwise it is ``1 / lambda_max(P^{+1/2} M P^{+1/2})``.  Returns
    ``None`` when ``M`` vanishes (the lower inequality is vacuous).
    """
    P = (P + adjoint(P)) / 2.0
    M = (M + adjoint(M)) / 2.0
    m_norm = spectral_norm(M)
    if m_norm <= np.finfo(float).eps * max(1.0, spectral_norm(P)):
        return None
    w, v = np.linalg.eigh(P)
    cut = max(w[-1], 0.0) * P.shape[0] * np.finfo(float).eps * 10
    keep = w > cut
    if not keep.any():
        return 0.0
    ker = v[:, ~keep]
    if ker.size and spectral_norm(adjoint(ker) @ M @ ker) > tol * m_norm:
        return 0.0
    W = v[:, keep] / np.sqrt(w[keep])
    top = float(np.linalg.eigvalsh(adjoint(W) @ M @ W)[-1])
    if top <= 0.0:
        return None
    return 1.0 / top


def _forms(F: FrameSystem, kind: str, C: ModuleOperator | None, K: ModuleOperator | None):
    """Middle-term and lower-form matrices (P, M) for a kind; M may be None."""
    if kind not in KINDS:
        raise UsageError(f"unknown kind {kind!r}; expected one of {KINDS}")
    _check_frame_op(F, C)
    _check_frame_op(F, K)
    G = F.gram
    if kind in ("controlled", "controlled_kframe") and C is None:
        raise UsageError(f"kind {kind!r} requires a controller C")
    if kind in ("kframe", "controlled_kframe") and K is None:
        raise UsageError(f"kind {kind!r} requires an operator K")
    uses_c = kind in ("controlled", "controlled_kframe") or (kind == "bessel" and C is not None)
    P = G @ C.matrix if uses_c else G
    eye = np.eye(G.shape[0], dtype=complex)
    if kind in ("frame", "controlled"):
        M = eye
    elif kind == "kframe":
        M = adjoint(K.matrix) @ K.matrix
    elif kind == "controlled_kframe":
        M = adjoint(K.matrix) @ C.matrix @ K.matrix
    else:
        M = None
    return P, M, uses_c


def optimal_bounds(
    F: FrameSystem,
    kind: str,
    C: ModuleOperator | None = None,
    K: ModuleOperator | None = None,
    tol: float = DEFAULT_TOL,
) -> BoundsReport:
    """Optimal frame bounds of the given kind via the Gram reduction.

    Parameters
    ----------
    F : FrameSystem
    kind : {"frame", "bessel", "kframe", "controlled", "controlled_kframe"}
    C : ModuleOperator, optional
        Controller; required for the controlled kinds, optional for "bessel".
    K : ModuleOperator, optional
        Required for the K kinds.

    Returns
    -------
    BoundsReport
        ``lowerA`` is the largest valid lower constant (``None`` when the
        lower inequality is vacuous or does not apply), ``upperB`` the
        smallest valid upper constant.  Non-commuting ``(C, G)`` gives a
        degenerate report instead of an exception.
    """
    P, M, uses_c = _forms(F, kind, C, K)
    if uses_c:
        check_controller(C, tol)
        gap = gram_commutator(F, C)
        if gap > tol:
            return BoundsReport(
                kind, None, None, holds=False, degenerate=True,
                reason=f"C does not commute with S (relative commutator {gap:.3e}); "
                       "the controlled middle term is not self-adjoint",
                details={"commutator": gap},
            )
        P = (P + adjoint(P)) / 2.0
    evals = np.linalg.eigvalsh(P)
    B = float(max(evals[-1], 0.0))
    if kind == "bessel":
        return BoundsReport(kind, None, B, holds=True, certified=_certify_upper(P, B, tol))

    if M is not None and kind in ("frame", "controlled"):
        A = float(max(evals[0], 0.0))
    else:
        A = pencil_lower(P, M, tol)
    if A is None:
        return BoundsReport(
            kind, None, B, holds=bool(evals[0] >= -tol * max(1.0, B)), degenerate=True,
            reason="K=0, lower bound unconstrained",
            certified=_certify_upper(P, B, tol),
        )
    scale = spectral_norm(P) / max(spectral_norm(M), np.finfo(float).tiny)
    holds = A > DECISION_THRESHOLD * scale and B > 0.0
    tight = holds and (B - A) <= TIGHT_GAP * B
    parseval = tight and abs(A - 1.0) <= TIGHT_GAP and abs(B - 1.0) <= TIGHT_GAP
    certified = _certify_upper(P, B, tol)
    if holds:
        certified = certified and _certify_lower(P, M, A, tol)
    return BoundsReport(kind, A, B, holds=holds, tight=tight, parseval=parseval,
                        certified=certified)


def _certify_upper(P, B, tol) -> bool:
    eye = np.eye(P.shape[0])
    ok = loewner_holds(P, B * eye, tol)
    if B > 0:
        ok = ok and not loewner_holds(P, B * (1 - 1e-3) * eye, tol)
    return ok


def _certify_lower(P, M, A, tol) -> bool:
    return loewner_holds(A * M, P, tol) and not loewner_holds(A * (1 + 1e-3) * M, P, tol)


def lower_bisect(P: np.ndarray, M: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Largest ``A`` with ``A M <= P`` by bisection on the Loewner predicate.

    The shipped cross-check for :func:`pencil_lower`.
    """
    hi = spectral_norm(P) / max(spectral_norm(M), np.finfo(float).tiny) * (1 + 1e-6)
    if not loewner_holds(0 * M, P, tol):
        return 0.0
    return loewner_bisect(lambda a: loewner_holds(a * M, P, tol), 0.0, hi,
                          increasing=False, rel_width=1e-10)


# ---------------------------------------------------------------------------
# sampled check of the A-valued inequalities


@dataclass
class QuadraticCheck:
    passed: bool
    worst_margin: float
    samples: int


def sample_vectors(d: int, n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    shape = (samples, d, n * d)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def middle_terms(F: FrameSystem, Fs: np.ndarray, C: ModuleOperator | None) -> np.ndarray:
    """``sum_j <f, psi_j> <C psi_j, f>`` for a batch ``Fs`` of flattened f.

    Computed term by term from inner products, without the Gram matrix.
    """
    cpsi = F.psi if C is None else F.psi @ C.matrix
    left = np.einsum("sak,jbk->sjab", Fs, F.psi.conj())   # <f, psi_j>
    right = np.einsum("jak,sbk->sjab", cpsi, Fs.conj())    # <C psi_j, f>
    return np.einsum("sjab,sjbc->sac", left, right)


def quadratic_form_check(
    F: FrameSystem,
    kind: str,
    A: float | None,
    B: float | None,
    C: ModuleOperator | None = None,
    K: ModuleOperator | None = None,
    samples: int = 50,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> QuadraticCheck:
    """Test the A-valued frame inequality of ``kind`` on random vectors.

    Each sample ``f`` is checked as ``A <lower f> <= middle(f) <= B <f, f>``
    in the Loewner order of ``M_d``.  ``A`` or ``B`` may be ``None`` to skip
    that side.  The worst scaled margin over all samples is returned.
    """
    if kind not in KINDS:
        raise UsageError(f"unknown kind {kind!r}")
    _check_frame_op(F, C)
    _check_frame_op(F, K)
    rng = np.random.Generator(np.random.Philox(seed))
    Fs = sample_vectors(F.d, F.n, samples, rng)
    uses_c = kind in ("controlled", "controlled_kframe") or (kind == "bessel" and C is not None)
    mid = middle_terms(F, Fs, C if uses_c else None)
    gram_f = np.einsum("sak,sbk->sab", Fs, Fs.conj())
    lower = None
    if kind in ("frame", "controlled"):
        lower = gram_f
    elif kind in ("kframe", "controlled_kframe"):
        X = K.H
        if kind == "controlled_kframe":
            X = op_sqrt(C, tol) @ X
        Y = Fs @ X.matrix
        lower = np.einsum("sak,sbk->sab", Y, Y.conj())
    worst = np.inf
    passed = True
    for s in range(samples):
        m = mid[s]
        scale = max(1.0, spectral_norm(m))
        if hermitian_defect(m) > tol * scale:
            passed = False
            worst = min(worst, -hermitian_defect(m) / scale)
            continue
        if B is not None:
            marg = loewner_margin(m, B * gram_f[s])
            worst = min(worst, marg)
            passed = passed and marg >= -tol
        if A is not None and lower is not None:
            marg = loewner_margin(A * lower[s], m)
            worst = min(worst, marg)
            passed = passed and marg >= -tol
    return QuadraticCheck(passed=bool(passed), worst_margin=float(worst), samples=samples)
