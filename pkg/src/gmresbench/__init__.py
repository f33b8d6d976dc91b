"""Restarted GMRES(m) with pluggable execution backends and a speedup
benchmark harness."""

from .backends import (
    Backend,
    BackendId,
    BackendStats,
    DispatchPolicy,
    OffloadBackend,
    OpKind,
    ParallelBackend,
    SerialBackend,
    backend_stats_snapshot,
    choose_placement,
    create_backend,
)
from .bench import (
    BenchSpec,
    ConvergenceError,
    SpeedupRow,
    SpeedupTable,
    generate_problem,
    run_benchmark,
    table_from_csv,
    table_to_csv,
    table_to_json,
    time_solve,
)
from .direct import solve_direct
from .gmres import (
    ConvergenceCriterion,
    GmresConfig,
    GmresResult,
    GmresStatus,
    KrylovState,
    ResidualKind,
    ResidualRecord,
    SingularHessenbergError,
    StepOutcome,
    arnoldi_step,
    form_solution,
    gmres_solve,
    initial_residual,
    qr_update,
    solve_ls,
    start_cycle,
)
from .linalg import (
    DenseMatrix,
    DimensionMismatchError,
    Vector,
    axpy,
    dot,
    matvec,
    norm2,
    scale,
)
from .mmio import MatrixMarketParseError, read_matrix_market, read_vector, write_matrix_market

__version__ = "0.1.0"
