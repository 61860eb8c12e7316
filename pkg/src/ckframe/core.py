"""Matrix algebra A = M_d(C), the module H = A^n, and adjointable operators.

Conventions
-----------
A vector ``f = (f_1, ..., f_n)`` with blocks ``f_i`` in ``M_d(C)`` is stored
flattened as the ``d x nd`` matrix ``[f_1 | ... | f_n]``.  The A-valued inner
product is ``<x, y> = sum_i x_i y_i^* = X Y^*`` and the algebra acts on the
left, ``(a.f)_i = a f_i``.

An adjointable operator is an ``nd x nd`` matrix ``B`` acting on the right,
``F -> F B``.  Left module maps commute with right multiplication, so every
such operator is automatically A-linear.  The price is that composition
reverses: "apply T1, then T2" has flattened matrix ``B1 @ B2``.  Operators
are written in left notation everywhere else (``C S`` means apply ``S``
first), and :func:`op_compose` does the bookkeeping.

The quadratic form ``f -> <Xf, Xf>`` has flattened matrix ``X X^*`` (see
:func:`qform`), while the operator ``X X^*`` has flattened matrix
``X^* X``.  Keeping these apart is most of the work in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9


class ShapeError(ValueError):
    """Operands have incompatible (d, n) shapes."""


class DomainError(ValueError):
    """An operand lies outside the domain of an operation (e.g. not PSD)."""


class UsageError(ValueError):
    """An operation was called with missing or contradictory arguments."""


# ---------------------------------------------------------------------------
# algebra elements (plain d x d complex arrays)


def as_element(a, d: int | None = None) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a, dtype=complex))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"algebra element must be square, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ShapeError(f"expected a {d}x{d} element, got {arr.shape}")
    return arr


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def spectral_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_defect(a: np.ndarray) -> float:
    """Spectral norm of the anti-Hermitian part of ``a``."""
    return spectral_norm(a - adjoint(a)) / 2.0


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    return hermitian_defect(a) <= tol * max(1.0, spectral_norm(a))


def is_positive(a, tol: float = DEFAULT_TOL) -> bool:
    """True if ``a`` is Hermitian and its spectrum is >= -tol * scale."""
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        return False
    scale = max(1.0, spectral_norm(a))
    return float(np.linalg.eigvalsh(_herm(a))[0]) >= -tol * scale


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + adjoint(a)) / 2.0


def loewner_margin(a, b) -> float:
    """Scaled ``lambda_min(b - a)``; non-negative iff ``a <= b`` exactly.

    The scale is ``max(1, ||a||, ||b||)``.  Inputs must already be Hermitian
    to the caller's satisfaction; only their Hermitian parts are used.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    scale = max(1.0, spectral_norm(a), spectral_norm(b))
    return float(np.linalg.eigvalsh(_herm(b - a))[0]) / scale


def loewner_leq(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Decide ``a <= b`` in the Loewner order.

    Parameters
    ----------
    a, b : array_like
        Hermitian matrices of the same size (within ``tol``).
    tol : float
        Relative slack; the test is
        ``lambda_min(b - a) >= -tol * max(1, ||a||, ||b||)``.

    Raises
    ------
    DomainError
        If either input is not Hermitian within ``tol``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare shapes {a.shape} and {b.shape}")
    for name, x in (("a", a), ("b", b)):
        if not is_hermitian(x, tol):
            raise DomainError(
                f"{name} is not Hermitian (defect {hermitian_defect(x):.3e})"
            )
    return loewner_margin(a, b) >= -tol


def loewner_holds(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Like :func:`loewner_leq` but a non-Hermitian difference is just False.

    An order relation between non-self-adjoint elements never holds, which
    is how the theorem checks treat non-commuting controllers.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    diff = b - a
    scale = max(1.0, spectral_norm(a), spectral_norm(b))
    if hermitian_defect(diff) > tol * scale:
        return False
    return loewner_margin(a, b) >= -tol


def loewner_bisect(
    predicate, lo: float, hi: float, *, increasing: bool, rel_width: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Boundary of a monotone predicate on ``[lo, hi]`` by bisection.

    With ``increasing=True`` the predicate is assumed False below and True
    above the boundary, and the smallest passing value is returned.  With
    ``increasing=False`` the largest passing value is returned.
    """
    width = rel_width * max(abs(hi), abs(lo), np.finfo(float).tiny)
    for _ in range(max_iter):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        ok = predicate(mid)
        if increasing:
            if ok:
                hi = mid
            else:
                lo = mid
        else:
            if ok:
                lo = mid
            else:
                hi = mid
    return hi if increasing else lo


# ---------------------------------------------------------------------------
# module vectors


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """An element of ``A^n`` held as its ``d x nd`` flattening."""

    flat: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.flat, dtype=complex))
        if arr.ndim != 2 or arr.shape[1] % arr.shape[0]:
            raise ShapeError(f"flattened vector must be d x nd, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "flat", arr)

    @classmethod
    def from_blocks(cls, blocks) -> "ModuleVector":
        blocks = [as_element(b) for b in blocks]
        return cls(np.hstack(blocks))

    @classmethod
    def zeros(cls, d: int, n: int) -> "ModuleVector":
        return cls(np.zeros((d, n * d), dtype=complex))

    @property
    def d(self) -> int:
        return self.flat.shape[0]

    @property
    def n(self) -> int:
        return self.flat.shape[1] // self.flat.shape[0]

    @property
    def blocks(self) -> list[np.ndarray]:
        d = self.d
        return [self.flat[:, i * d:(i + 1) * d] for i in range(self.n)]

    def scale(self, a) -> "ModuleVector":
        """Left action ``a . f``."""
        return ModuleVector(as_element(a, self.d) @ self.flat)

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        _check_same(self, other)
        return ModuleVector(self.flat + other.flat)

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        _check_same(self, other)
        return ModuleVector(self.flat - other.flat)

    def __mul__(self, c) -> "ModuleVector":
        return ModuleVector(complex(c) * self.flat)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Module norm ``||<f, f>||^(1/2)``, i.e. the top singular value."""
        return spectral_norm(self.flat)


def _check_same(x, y) -> None:
    if (x.d, x.n) != (y.d, y.n):
        raise ShapeError(f"shape mismatch: (d, n) = {(x.d, x.n)} vs {(y.d, y.n)}")


def inner_product(x: ModuleVector, y: ModuleVector) -> np.ndarray:
    """A-valued inner product ``<x, y> = sum_i x_i y_i^*``."""
    _check_same(x, y)
    return x.flat @ adjoint(y.flat)


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    """Adjointable operator on ``A^n``, stored as its ``nd x nd`` flattening.

    ``T(f)`` is ``F @ matrix``.  ``T2 @ T1`` composes in left notation
    (apply ``T1`` first), the same as ``op_compose(T2, T1)``.
    """

    matrix: np.ndarray
    d: int

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if arr.shape[0] != arr.shape[1] or arr.shape[0] % self.d:
            raise ShapeError(f"operator matrix must be nd x nd, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // self.d

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, d: int, n: int) -> "ModuleOperator":
        return cls(np.eye(n * d, dtype=complex), d)

    @classmethod
    def zeros(cls, d: int, n: int) -> "ModuleOperator":
        return cls(np.zeros((n * d, n * d), dtype=complex), d)

    @classmethod
    def from_blocks(cls, blocks) -> "ModuleOperator":
        """Build from an ``n x n`` grid of ``d x d`` blocks ``B_{ki}``."""
        return cls(np.block([[as_element(b) for b in row] for row in blocks]),
                   as_element(blocks[0][0]).shape[0])

    def block(self, k: int, i: int) -> np.ndarray:
        d = self.d
        return self.matrix[k * d:(k + 1) * d, i * d:(i + 1) * d]

    def adjoint(self) -> "ModuleOperator":
        return op_adjoint(self)

    @property
    def H(self) -> "ModuleOperator":
        return op_adjoint(self)

    def __call__(self, f: ModuleVector) -> ModuleVector:
        return op_apply(self, f)

    def __matmul__(self, other: "ModuleOperator") -> "ModuleOperator":
        return op_compose(self, other)

    def __add__(self, other: "ModuleOperator") -> "ModuleOperator":
        _check_ops(self, other)
        return ModuleOperator(self.matrix + other.matrix, self.d)

    def __sub__(self, other: "ModuleOperator") -> "ModuleOperator":
        _check_ops(self, other)
        return ModuleOperator(self.matrix - other.matrix, self.d)

    def __mul__(self, c) -> "ModuleOperator":
        return ModuleOperator(complex(c) * self.matrix, self.d)

    __rmul__ = __mul__

    def norm(self) -> float:
        return op_norm(self)


def _check_ops(*ops: ModuleOperator) -> None:
    first = ops[0]
    for op in ops[1:]:
        if (op.d, op.n) != (first.d, first.n):
            raise ShapeError(
                f"operator shapes differ: (d, n) = {(first.d, first.n)} vs {(op.d, op.n)}"
            )


def op_adjoint(T: ModuleOperator) -> ModuleOperator:
    return ModuleOperator(adjoint(T.matrix), T.d)


def op_apply(T: ModuleOperator, f: ModuleVector) -> ModuleVector:
    if (T.d, T.n) != (f.d, f.n):
        raise ShapeError(f"operator (d, n) = {(T.d, T.n)} applied to vector {(f.d, f.n)}")
    return ModuleVector(f.flat @ T.matrix)


def op_compose(T2: ModuleOperator, T1: ModuleOperator) -> ModuleOperator:
    """The operator "apply ``T1``, then ``T2``" (left notation ``T2 T1``)."""
    _check_ops(T2, T1)
    return ModuleOperator(T1.matrix @ T2.matrix, T1.d)


def compose(*ops: ModuleOperator) -> ModuleOperator:
    """Left-notation product ``ops[0] ops[1] ... ops[-1]``."""
    out = ops[-1]
    for op in reversed(ops[:-1]):
        out = op_compose(op, out)
    return out


def qform(T: ModuleOperator) -> np.ndarray:
    """Flattened matrix ``Q`` with ``<Tf, Tf> = F Q F^*`` for every f."""
    return T.matrix @ adjoint(T.matrix)


def commutator_norm(X: ModuleOperator, Y: ModuleOperator) -> float:
    _check_ops(X, Y)
    return spectral_norm(X.matrix @ Y.matrix - Y.matrix @ X.matrix)


def commutes(X: ModuleOperator, Y: ModuleOperator, tol: float = DEFAULT_TOL) -> bool:
    """``||XY - YX|| <= tol * max(1, ||X|| ||Y||)``."""
    return commutator_norm(X, Y) <= tol * max(1.0, op_norm(X) * op_norm(Y))


def op_sqrt(T: ModuleOperator, tol: float = DEFAULT_TOL) -> ModuleOperator:
    """Positive square root by Hermitian eigendecomposition.

    Eigenvalues in ``[-tol * scale, 0)`` are clamped to zero; anything more
    negative is treated as genuine indefiniteness.
    """
    mat = T.matrix
    scale = max(1.0, spectral_norm(mat))
    if hermitian_defect(mat) > tol * scale:
        raise DomainError(f"square root of a non-Hermitian operator "
                          f"(defect {hermitian_defect(mat):.3e})")
    w, v = np.linalg.eigh(_herm(mat))
    if w[0] < -tol * scale:
        raise DomainError(f"square root of an indefinite operator (lambda_min={w[0]:.3e})")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ adjoint(v)
    return ModuleOperator(root, T.d)


def op_inv(T: ModuleOperator) -> ModuleOperator:
    return ModuleOperator(np.linalg.inv(T.matrix), T.d)


def pinv_cutoff(mat: np.ndarray) -> float:
    """Relative singular-value cutoff ``nd * eps``."""
    return mat.shape[0] * np.finfo(float).eps


def op_pinv(T: ModuleOperator) -> ModuleOperator:
    """Moore-Penrose inverse; singular values below ``nd * eps * s_max`` drop."""
    return ModuleOperator(np.linalg.pinv(T.matrix, rcond=pinv_cutoff(T.matrix)), T.d)


def penrose_residuals(T: ModuleOperator, Tp: ModuleOperator) -> tuple[float, float, float, float]:
    """Residuals of the four Penrose identities for a candidate ``Tp = T^+``."""
    A, X = T.matrix, Tp.matrix
    return (
        spectral_norm(A @ X @ A - A),
        spectral_norm(X @ A @ X - X),
        spectral_norm(adjoint(A @ X) - A @ X),
        spectral_norm(adjoint(X @ A) - X @ A),
    )


def op_norm(T: ModuleOperator) -> float:
    return spectral_norm(T.matrix)


def bounded_below_margin(T: ModuleOperator) -> float:
    """Largest m with ``||Tf|| >= m ||f||``: the smallest singular value."""
    return float(np.linalg.svd(T.matrix, compute_uv=False)[-1])


def smallest_nonzero_singular(T: ModuleOperator) -> float:
    s = np.linalg.svd(T.matrix, compute_uv=False)
    keep = s > pinv_cutoff(T.matrix) * max(s[0], 0.0)
    return float(s[keep][-1]) if keep.any() else 0.0


def alinear_bound(T: ModuleOperator) -> float:
    """Smallest k with ``<Tx, Tx> <= k <x, x>`` for all x, i.e. ``||T||^2``."""
    return op_norm(T) ** 2


def is_surjective(T: ModuleOperator, tol: float = DEFAULT_TOL) -> bool:
    """Range of T is all of H: ``T T^+`` is the identity."""
    proj = op_compose(T, op_pinv(T)).matrix
    return spectral_norm(proj - np.eye(T.size)) <= tol * T.size


# ---------------------------------------------------------------------------
# range inclusion and Douglas factorization


def range_residual(Tp: ModuleOperator, T: ModuleOperator) -> float:
    """``||(I - T T^+) T'||`` -- the part of ``R(T')`` outside ``R(T)``."""
    _check_ops(Tp, T)
    proj = op_compose(T, op_pinv(T))
    return op_norm(op_compose(ModuleOperator.identity(T.d, T.n) - proj, Tp))


def range_contained(Tp: ModuleOperator, T: ModuleOperator, tol: float = DEFAULT_TOL) -> bool:
    return range_residual(Tp, T) <= tol * op_norm(Tp)


@dataclass(frozen=True)
class DouglasSolution:
    D: ModuleOperator
    mu_min: float
    residual: float


def douglas_solve(
    Tp: ModuleOperator, T: ModuleOperator, tol: float = DEFAULT_TOL
) -> DouglasSolution | None:
    """Solve ``T X = T'`` when ``R(T') ⊆ R(T)``.

    Returns the minimal-norm solution ``D = T^+ T'`` together with the least
    ``mu`` such that ``T' T'^* <= mu T T^*``, which equals ``||D||^2``.
    Returns ``None`` when the range condition fails.
    """
    if not range_contained(Tp, T, tol):
        return None
    D = op_compose(op_pinv(T), Tp)
    residual = op_norm(op_compose(T, D) - Tp)
    return DouglasSolution(D=D, mu_min=op_norm(D) ** 2, residual=residual)


def douglas_mu_bisect(Tp: ModuleOperator, T: ModuleOperator, tol: float = DEFAULT_TOL) -> float:
    """Least ``mu`` with ``T' T'^* <= mu T T^*`` found on the Loewner predicate.

    Independent of the pseudoinverse route; used to cross-check
    :func:`douglas_solve`.  Assumes the range condition holds.
    """
    lhs = op_compose(Tp, Tp.H).matrix
    rhs = op_compose(T, T.H).matrix
    s = smallest_nonzero_singular(T)
    if op_norm(Tp) == 0.0:
        return 0.0
    hi = (op_norm(Tp) / max(s, np.finfo(float).eps)) ** 2 * (1 + 1e-6)
    return loewner_bisect(lambda mu: loewner_leq(lhs, mu * rhs, tol), 0.0, hi,
                          increasing=True)
