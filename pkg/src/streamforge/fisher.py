"""Monte Carlo simulation of Fisher's exact test on I x J contingency tables.

The statistic for a table is -sum log(n_ij!); "more extreme" means at or
below the observed value.  Random tables with the observed margins come from
sequential conditional hypergeometric sampling (Patefield's construction),
one uniform per free cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .core import StreamSet
from .errors import (
    InsufficientStreamsError,
    InvalidArgumentError,
    InvalidMarginsError,
)
from .grid import WorkGrid

# relative slack so replicate statistics tied with the observed table count
THRESHOLD_RELATIVE_SLACK = 1e-7

DEFAULT_FISHER_GRID = WorkGrid(64, 16)


@dataclass
class ContingencyTable:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int64)
        if entries.ndim != 2:
            raise InvalidArgumentError("a contingency table must be 2-D")
        if (entries < 0).any():
            raise InvalidArgumentError("table entries must be non-negative")
        if entries.shape[0] < 2 and entries.shape[1] < 2:
            raise InvalidArgumentError("table must have at least 2 rows or columns")
        if entries.sum() < 1:
            raise InvalidArgumentError("table total must be >= 1")
        self.entries = entries

    @property
    def row_margins(self):
        return self.entries.sum(axis=1)

    @property
    def col_margins(self):
        return self.entries.sum(axis=0)

    @property
    def total(self):
        return int(self.entries.sum())


@dataclass
class FisherResult:
    threshold: float
    sim_num: int
    counts: int
    p_value: float
    statistics: np.ndarray | None = None


def log_factorial_table(nmax: int) -> np.ndarray:
    """log(k!) for k = 0..nmax via log-gamma."""
    return gammaln(np.arange(nmax + 1, dtype=np.float64) + 1.0)


def logfact_sum(table) -> float:
    """The observed statistic -sum log(n_ij!)."""
    if isinstance(table, ContingencyTable):
        table = table.entries
    table = np.asarray(table, dtype=np.float64)
    return float(-gammaln(table + 1.0).sum())


def _check_margins(row_margins, col_margins):
    row_margins = np.asarray(row_margins, dtype=np.int64)
    col_margins = np.asarray(col_margins, dtype=np.int64)
    if row_margins.ndim != 1 or col_margins.ndim != 1:
        raise InvalidMarginsError("margins must be 1-D")
    if (row_margins < 0).any() or (col_margins < 0).any():
        raise InvalidMarginsError("margins must be non-negative")
    if row_margins.sum() != col_margins.sum():
        raise InvalidMarginsError("row and column margins have different totals")
    return row_margins, col_margins


def rcont2(row_margins, col_margins, state6, lf=None) -> np.ndarray:
    """Sample one random table with the given margins.

    `state6` is a mutable six-entry int64 array (one stream's current state),
    advanced in place by exactly (I-1)(J-1) steps for I, J >= 2.
    """
    row_margins, col_margins = _check_margins(row_margins, col_margins)
    if lf is None:
        lf = log_factorial_table(int(row_margins.sum()))
    state6 = np.asarray(state6, dtype=np.int64)
    return _kernels.rcont2_table(row_margins, col_margins, lf, state6)


def sim_num_for(n: int, grid: WorkGrid) -> int:
    """Requested replicates rounded up to a multiple of the work-item count."""
    return int(math.ceil(n / grid.size)) * grid.size


def relaxed_threshold(threshold: float) -> float:
    """Observed statistic relaxed by 1e-7 relative magnitude toward inclusion."""
    return threshold + THRESHOLD_RELATIVE_SLACK * abs(threshold)


def fisher_sim(
    table,
    n: int,
    streams: StreamSet,
    grid: WorkGrid = DEFAULT_FISHER_GRID,
    return_stats: bool = False,
    threads: int | None = None,
) -> FisherResult:
    """Monte Carlo p-value for Fisher's exact test.

    The actual replicate count is n rounded up to a multiple of the work-item
    count; each work item runs its share sequentially on its own stream.
    p = (1 + counts) / (sim_num + 1).
    """
    if not isinstance(table, ContingencyTable):
        table = ContingencyTable(table)
    if n < 1:
        raise InvalidArgumentError("replicate count must be >= 1")
    if streams.count < grid.size:
        raise InsufficientStreamsError(
            f"grid needs {grid.size} streams, got {streams.count}"
        )
    if threads is not None:
        _kernels.set_threads(threads)
    sim_num = sim_num_for(n, grid)
    reps = sim_num // grid.size
    threshold = logfact_sum(table)
    lf = log_factorial_table(table.total)
    stats = np.empty(sim_num if return_stats else 0, dtype=np.float64)
    counts = _kernels.fisher_replicates(
        streams.current,
        table.row_margins,
        table.col_margins,
        lf,
        relaxed_threshold(threshold),
        reps,
        grid.size,
        stats,
        return_stats,
    )
    return FisherResult(
        threshold=threshold,
        sim_num=sim_num,
        counts=int(counts),
        p_value=(1 + int(counts)) / (sim_num + 1),
        statistics=stats if return_stats else None,
    )
