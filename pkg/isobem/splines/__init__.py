from .spline_kernel import (
    KnotVector,
    QuadRule1D,
    TensorSplineSpace,
    basis_funs,
    dyadic_refine,
    dual_function,
    element_dual_pairing,
    eval_bspline,
    eval_bspline_derivative,
    gauss_rule,
    tensor_rule,
    two_scale_matrix,
)
from .hier_basis import (
    ElementBasis,
    HierFn,
    SplineSpace,
    THBRep,
    build_basis,
    coarse_to_fine,
    eval_fn,
    quasi_interpolate,
    truncate,
)
