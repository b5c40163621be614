"""Geodesic flow recovery from sampled manifolds through graph half-wave propagators."""

from .errors import (
    DegenerateGraphError,
    DegenerateStateError,
    EigensolverError,
    EmptySupportError,
    FunctionDomainError,
    GeoflowError,
    InvalidArgumentError,
    NumericalConsistencyError,
    PointCloudIOError,
    SpectrumViolationError,
    UnsupportedModelError,
)
from .sampling import (
    GeodesicQuery,
    Model,
    PointCloud,
    geodesic_distance,
    geodesic_oracle,
    load_point_cloud,
    sample_circle,
    sample_flat_torus,
    sample_sphere,
    save_point_cloud,
)
from .laplacian import GraphOperators, KernelConfig, build_graph_operators, extension_kernel
from .spectral import (
    ScalarFunction,
    SpectralDecomposition,
    apply_function,
    chebyshev_adaptive,
    decompose,
    nystrom_extend,
    propagator,
    sqrt_shifted,
    wave_parts,
    wave_propagate,
)
from .states import CoherentState, make_state_neighbor, make_state_tangent
from .recovery import GeodesicTrace, RecoveryConfig, trace_geodesic
from .bounds import bernstein_bound

__version__ = "0.1.0"
