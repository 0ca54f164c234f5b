"""Learned low-dimensional projections for convex quadratic programs."""
from .core import (
    PerturbSpec,
    ProjectedQp,
    ProjectionMatrix,
    QpInstance,
    orthonormalize,
    perturb,
    project,
    random_projection,
    validate_instance,
)
from .instances import GenSpec, SchemaError, generate, load, lower_bound_instance, lower_bound_projection, save
from .learn import (
    OracleError,
    TrainConfig,
    TrainReport,
    envelope_grad,
    matching_grad,
    matching_loss,
    objective_loss,
    train,
)
from .netproj import InputAwareNet, forward, train_input_aware
from .oracle import SolveResult, certify, solve_enumerate, solve_iterative, verify_localization
from .bench import BenchReport, run_bench
from .structure import LowerBoundBox, LowerBoundSimplex

__version__ = "0.1.0"
