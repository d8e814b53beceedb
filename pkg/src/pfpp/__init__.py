"""Exact sampling of Pfaffian point processes and symplectic Krylov tools."""

from .errors import (
    BreakdownError,
    ConditioningError,
    GibbsStateError,
    InvalidKernelError,
    NoLKernelError,
    NotSkewError,
    NumericalFailure,
    PfppError,
    RangeError,
    ShapeError,
    SingularPivotError,
)
from .gibbs import slice_within_gibbs
from .kernels import (
    Grid,
    Kernel2x2,
    build_airy_kernel,
    build_finite_kernel,
    corner_growth_kernel,
    discretize,
    fredholm_pfaffian,
    second_eigenvalue_density,
)
from .krylov import EsrKind, SkewInnerProduct, cholesky_sop, symplectic_arnoldi
from .sampler import (
    PrefixCachedSampler,
    SampleRun,
    exact_distribution,
    sample,
    sample_batch,
)
from .skew import SkewMatrix, condition, kernel_convert, pfaffian, skew_cholesky

__version__ = "0.1.0"

__all__ = [
    "BreakdownError", "ConditioningError", "EsrKind", "GibbsStateError", "Grid",
    "InvalidKernelError", "Kernel2x2", "NoLKernelError", "NotSkewError", "NumericalFailure",
    "PfppError", "PrefixCachedSampler", "RangeError", "SampleRun", "ShapeError",
    "SingularPivotError", "SkewInnerProduct", "SkewMatrix", "build_airy_kernel",
    "build_finite_kernel", "cholesky_sop", "condition", "corner_growth_kernel", "discretize",
    "exact_distribution", "fredholm_pfaffian", "kernel_convert", "pfaffian", "sample",
    "sample_batch", "second_eigenvalue_density", "skew_cholesky", "slice_within_gibbs",
    "symplectic_arnoldi",
]
