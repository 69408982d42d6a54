"""Memory-efficient low-rank natural-gradient optimization.

Low-rank gradient projection (periodically refreshed from the
gradient's compact SVD) combined with an inverse empirical Fisher
transform applied through the Woodbury identity, plus Adam moment
tracking, a minimal reverse-mode training harness, and a CLI for
verification and convergence benchmarks.
"""

from .adam import AdamState, adam_update, apply_weight_decay, init_adam
from .errors import (
    CheckpointError,
    DimensionError,
    NatGaloreError,
    NotPositiveDefiniteError,
    NumericalError,
)
from .linalg import (
    CholeskyFactor,
    CompactSVD,
    cholesky_factor,
    compact_svd,
    frobenius_norm,
    matmul,
    solve_cholesky,
    transpose,
)
from .natgrad import GradHistory, apply_inverse_fim, push, reset
from .optimizer import (
    MemoryReport,
    OptimizerConfig,
    ParamSlot,
    checkpoint_load,
    checkpoint_save,
    init_slots,
    memory_report,
    step,
)
from .projector import Projector, project, project_back, refresh, should_refresh
from .tasks import Batch, make_task
from .train import TrainRecord, TrainResult, train

__version__ = "0.1.0"
