"""streamforge: reproducible parallel RNG streams and their applications.

MRG31k3p streams with jump-ahead spacing, deterministic CPU emulation of a
2-D work-item grid, uniform/normal/exponential fills, a Monte Carlo Fisher
exact test, and batched Matern Gaussian random field simulation.
"""

from .core import (
    DEFAULT_SEED,
    M1,
    M2,
    NORM,
    CreatorState,
    StreamSet,
    StreamState,
    create_streams,
    jump_ahead,
    load_streams,
    next_state,
    save_streams,
    set_base_creator,
)
from .distributions import (
    FillRequest,
    fill,
    fill_exponential,
    fill_normal,
    fill_uniform,
)
from .fisher import ContingencyTable, FisherResult, fisher_sim, logfact_sum, rcont2
from .grf import (
    BatchedMatrix,
    DiagBatch,
    GridSpec,
    MaternParams,
    bessel_k,
    chol_batch,
    matern_correlation,
    matern_cov,
    multiply_lower_diag_batch,
    simulate_grf,
)
from .grid import MatrixBuffer, WorkGrid, element_plan, run_grid, stream_index

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SEED",
    "M1",
    "M2",
    "NORM",
    "CreatorState",
    "StreamSet",
    "StreamState",
    "create_streams",
    "jump_ahead",
    "load_streams",
    "next_state",
    "save_streams",
    "set_base_creator",
    "FillRequest",
    "fill",
    "fill_exponential",
    "fill_normal",
    "fill_uniform",
    "ContingencyTable",
    "FisherResult",
    "fisher_sim",
    "logfact_sum",
    "rcont2",
    "BatchedMatrix",
    "DiagBatch",
    "GridSpec",
    "MaternParams",
    "bessel_k",
    "chol_batch",
    "matern_correlation",
    "matern_cov",
    "multiply_lower_diag_batch",
    "simulate_grf",
    "MatrixBuffer",
    "WorkGrid",
    "element_plan",
    "run_grid",
    "stream_index",
]
