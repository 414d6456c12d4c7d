"""Excitation transport in dissipative cavity-atom chains."""

__version__ = "0.1.0"

from .evolution import (
    Propagator,
    StepEngine,
    TrajectoryRecord,
    diagonalize,
    evolve,
    evolve_assembled,
    lindblad_step,
    observable,
    step_count,
    superoperator_oracle,
)
from .experiments import (
    OptimalRate,
    ReachTime,
    SinkAtTime,
    SweepAxis,
    SweepResult,
    SweepSpec,
    TimeToReach,
    bottleneck_scan,
    dat_scan,
    default_g_grid,
    default_rate_grid,
    optimal_rate,
    run_sweep,
    time_to_reach,
)
from .model import (
    AssembledChain,
    ChainConfig,
    DephasingModel,
    DephasingTarget,
    InitialState,
    LindbladTerm,
    SinkCoupling,
    assemble,
    build_basis,
    build_hamiltonian,
    build_layout,
    build_lindblad_terms,
    initial_density_matrix,
)
from .modes import (
    BasisMismatchError,
    DensityMatrix,
    EmptyBasisError,
    ModeKind,
    ModeLayout,
    ModeSpec,
    Operator,
    ProjectedBasis,
    QuantaWindow,
    enumerate_basis,
    identity_op,
    ladder_lower,
    ladder_raise,
    number_op,
    op_add,
    op_adjoint,
    op_mul,
    op_scale,
    total_quanta_op,
    transfer_op,
)
