"""Numerical laboratory for Fueter-Sce fine structures and S-spectrum functional calculi."""

__version__ = "0.1.0"

from .clifford import ImaginaryUnit, Multivector, Paravector, blade_product, clifford_mul, conjugate, sphere_of
from .errors import *  # noqa: F401,F403
from .jets import (
    ABH,
    AH,
    AHC1,
    AM,
    ANTI_HC1,
    AP2,
    AP3,
    APC12,
    Jet,
    OperatorWord,
    SpaceTag,
    apply_D,
    apply_Dbar,
    apply_Delta,
    apply_word,
    classify_membership,
    paravector_jet,
)
from .kernels import KernelPoint, closed_form_gate, fine_kernel, q_inv, s_left, s_left_jet
from .operators import (
    Circle,
    Contour,
    OperatorMultivector,
    OperatorTuple,
    SpectrumReport,
    conjugate_tuple,
    default_contour,
    functional_calculus,
    independence_checks,
    q_op,
    q_op_inverse,
    s_spectrum,
)
from .slices import AxialBox, SliceFunction, chain, eval_jet, seed_from_id, tfs1, tfs2
