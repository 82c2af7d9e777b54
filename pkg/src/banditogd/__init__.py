"""Two-point bandit online gradient descent for strongly convex losses."""

from .engine import RunConfig, Trace, comparator, regret, run, run_many, simulate
from .errors import (
    BanditOGDError,
    ConfigError,
    DimensionError,
    FeasibilityError,
    InsufficientDataError,
    ParameterError,
    SolverError,
    UnsupportedLossError,
)
from .geometry import ConvexBody, contains, project_shrunk
from .losses import AdversarySpec, LossFunction
from .sampling import RandomSource, sample_ball, sample_sphere

__version__ = "0.1.0"
