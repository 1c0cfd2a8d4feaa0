"""eisenlab: Schottky hyperbolic surfaces, boundary Poincare series, and
high-frequency equidistribution / trace-formula experiments."""

__version__ = "0.1.0"

from .geom import (  # noqa: F401
    BoundaryPoint,
    DiskIsometry,
    DiskPoint,
    SpectralParameter,
    hyp_distance,
)
from .schottky import (  # noqa: F401
    SchottkyGroup,
    build_symmetric_schottky,
    enumerate_geodesics,
    enumerate_words,
    estimate_delta,
    orbit_count,
)
from .eisenstein import eisenstein, harmonic_density  # noqa: F401
from .experiments import TestFunction, trace_compare  # noqa: F401
