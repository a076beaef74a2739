"""Sobolev-metric geometry of immersed open curves, at desk scale.

Discrete curves on a uniform grid, the reparametrization group of the
interval, constant-coefficient Sobolev metrics, canonical path families
with analytic velocities, closed-form bound certificates, bracketed
geodesic-distance estimation, and experiment drivers for the metric
completion phenomena (divergent Cauchy sequences, distinct limit points,
sharp exponent thresholds).
"""

__version__ = "0.1.0"

from .bounds import (
    BoundCertificate,
    delta_lower,
    recompute,
    rotate_upper,
    separation_delta,
    shrink_upper,
    translate_upper,
)
from .cauchy_lab import (
    ExperimentReport,
    SequenceSpec,
    run_cauchy_diagnostic,
    run_limit_identification,
    run_separation_experiment,
    run_threshold_scan,
)
from .diffeo import (
    DiscreteDiffeo,
    compose,
    delta,
    exp_family,
    hermite_family,
    identity,
    invert,
    reversal,
)
from .errors import (
    CurveSpaceError,
    DisconnectedComponentsError,
    DomainViolationError,
    GridMismatchError,
    InapplicableCertificateError,
    InsufficientRegularityError,
    InsufficientResolutionError,
    MonotonicityViolationError,
    NotAnImmersionError,
    NotASegmentError,
    OrientationMismatchError,
    OverflowGuardError,
    PathLeftSpaceError,
    UnsupportedDimensionError,
)
from .geodesic_opt import (
    DescentResult,
    GeodesicEstimate,
    OptimizerOptions,
    chain_distance_bound,
    geodesic_estimate,
    minimize_path_energy,
    path_energy,
    path_energy_gradient,
)
from .grid_curves import (
    SCHEME,
    DerivativeScheme,
    DiscreteCurve,
    Grid,
    TangentField,
    arclength_derivative,
    constant_speed,
    curve_length,
    derivative,
    l2ds_norm,
    read_curve_csv,
    read_field_csv,
    reparametrize,
    sobolev_sup_check,
    write_curve_csv,
)
from .metric import DEFAULT_METRIC, MetricCoefficients, metric_eval, metric_terms, tangent_norm
from .paths import (
    CurvePath,
    PathLengthReport,
    example_path,
    export_path,
    geometric_times,
    linear_interpolation_path,
    path_length,
    power_shrink_shorten,
    reparametrize_path,
    rotate_path,
    shorten_path,
    shrink_path,
    subpath,
    translate_path,
)
from . import testcurves
