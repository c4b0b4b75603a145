"""Divergences between sets of quantum states, with finite-copy bounds on
their regularized relative entropy."""

from .errors import (
    CompositionError,
    ConfigurationError,
    ConvergenceError,
    PreconditionError,
    ResourceLimitError,
    SingularOperatorError,
    UndefinedRateError,
)
from .linalg import (
    DensityOperator,
    HermitianOperator,
    SpectralDecomposition,
    eig,
    fidelity_and_distances,
    kron,
    matrix_fn,
    partial_trace,
    partial_transpose,
    pinch,
    spec_count,
    twirl,
)
from .infinity import INF, is_inf

__version__ = "0.1.0"
