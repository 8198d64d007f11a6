"""Construction, verification and enumeration of minimising geodesics."""
from .core import (
    DegenerateCurve,
    EndpointMismatch,
    GeodesicCurve,
    GeodesyError,
    MetricSpace,
    ParamGrid,
    ParametricCurve,
    PreconditionError,
    SpaceMismatch,
    Verdict,
    curves_disjoint,
    curves_distinct,
    distance,
    first_deviation,
    verify_geodesic,
    verify_geodesic_upper,
)

__version__ = "0.1.0"
