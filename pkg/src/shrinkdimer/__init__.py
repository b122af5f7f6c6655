"""Shrinking-dimer saddle dynamics for any-index saddle points."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    dimer_hessian_apply,
    dimer_length_at,
    gram_schmidt,
    householder_apply,
    stable_projector_apply,
    symmetrized_projector_apply,
)
from .dynamics import SaddleConfig, SaddleState, Trajectory, integrate, saddle_residual  # noqa: E402
from .exceptions import (  # noqa: E402
    DegenerateFrameError,
    DivergenceError,
    InputError,
    ProblemLookupError,
    SaddleError,
)
from .extrapolation import ExtrapolatedTrajectory, richardson_combine  # noqa: E402
from .harness import convergence_ladder, error_norms, run_reference, scaling_probe  # noqa: E402
from .problems import InitialCondition, Problem, default_initial_condition, register, registry_get  # noqa: E402
