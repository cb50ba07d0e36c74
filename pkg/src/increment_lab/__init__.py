"""Local empirical increments on lattices: sampling, exact counting, rate functionals,
exact Poissonization checks and verification campaigns."""

from .events import (Always, BallEvent, EndpointHalfSpace, FunctionalEvent, Neighborhood,
                     Oscillation, SupBall, event_from_dict)
from .gridfun import (DomainError, GridFunction, GridSpec, ShapeError, eval_rect, from_density,
                      sup_distance, sup_norm, to_density)
from .increments import (ConfigError, IncrementField, WindowConfig, build_field, count_field,
                         normalize, occupation_fraction, slice_at)
from .rates import (BallSpec, Feasibility, ball_feasibility, cluster_check, rate_J,
                    rate_poisson)
from .sampling import PointCloud, SeedStream, sample_uniform, sample_wiener_sheet

__version__ = "0.1.0"

__all__ = [
    "Always", "BallEvent", "BallSpec", "ConfigError", "DomainError", "EndpointHalfSpace",
    "Feasibility", "FunctionalEvent", "GridFunction", "GridSpec", "IncrementField",
    "Neighborhood", "Oscillation", "PointCloud", "SeedStream", "ShapeError", "SupBall",
    "WindowConfig", "ball_feasibility", "build_field", "cluster_check", "count_field",
    "eval_rect", "event_from_dict", "from_density", "normalize", "occupation_fraction",
    "rate_J", "rate_poisson", "sample_uniform", "sample_wiener_sheet", "slice_at",
    "sup_distance", "sup_norm", "to_density",
]
