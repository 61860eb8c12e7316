"""Controlled K-frames on Hilbert C*-modules over matrix algebras.

The module ``A^n`` over ``A = M_d(C)`` is modelled by flattening each
vector to a ``d x nd`` matrix; adjointable operators are ``nd x nd``
matrices acting by right multiplication.  See :mod:`ckframe.core` for the
conventions.
"""

from .core import (
    DomainError,
    ModuleOperator,
    ModuleVector,
    ShapeError,
    UsageError,
    douglas_solve,
    inner_product,
    loewner_leq,
    op_adjoint,
    op_apply,
    op_compose,
    op_pinv,
    op_sqrt,
    range_contained,
)
from .frames import (
    BoundsReport,
    FrameSystem,
    analysis,
    controlled_frame_op,
    frame_op,
    optimal_bounds,
    quadratic_form_check,
    synthesis,
)
from .instances import Instance, InstanceSpec, SchemaError, gen_instance, load_instance, save_instance
from .reconstruction import IterationStats, cg_invert, precondition_report, reconstruct, richardson_invert
from .suite import SuiteReport, run_suite
from .theorems import THEOREM_IDS, TheoremVerdict, counterexample_search, verify

__version__ = "0.1.0"
