"""Quantum-jump trajectories with hidden transitions and their entropy accounting."""

from .config import RunConfig, SweepSpec, load_config, parse_config, serialize_config
from .ensemble import SweepResult, run_ensemble, run_sweep, trajectory_seed
from .entropy import (
    EntropyLedger,
    LedgerTable,
    backward_kernel,
    entropy_ledger,
    forward_kernel,
    hidden_entropy,
    hidden_entropy_reconstructed,
    hidden_transition_probability,
    ift_estimate,
    second_law_check,
    system_entropy,
)
from .errors import (
    ConfigError,
    DegenerateSteadyStateError,
    ImpossibleTrajectoryError,
    NoNullSpaceError,
    NumericalError,
    PreconditionError,
)
from .linops import Propagator, expm, kron, null_vector, partial_trace_X, unvec, vec
from .model import (
    DemonParams,
    JumpOperator,
    LindbladModel,
    build_demon_model,
    liouville_generators,
    validate_detailed_balance,
)
from .unravel import (
    Trajectory,
    VisibleTrajectory,
    conditioned_state_series,
    parse_trajectory_spec,
    sample_trajectory,
    steady_state,
    steady_state_density,
    visible_filter,
)

__version__ = "0.1.0"
