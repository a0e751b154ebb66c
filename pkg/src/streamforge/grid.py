"""Deterministic CPU emulation of the 2-D work-item index space.

The mapping of output cells and streams to work items is a pure function of
the grid and the output dimensions, so results never depend on how work items
are scheduled onto threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import StreamSet
from .errors import InsufficientStreamsError, InvalidArgumentError, InvalidGridError

UNIFORM_KERNEL = "uniform"
NORMAL_KERNEL = "normal"


@dataclass(frozen=True)
class WorkGrid:
    """Two-dimensional global work-item index space."""

    nglobal0: int
    nglobal1: int

    def __post_init__(self):
        if self.nglobal0 < 1 or self.nglobal1 < 1:
            raise InvalidGridError("work grid dimensions must be >= 1")

    @property
    def size(self) -> int:
        return self.nglobal0 * self.nglobal1

    def require_paired_lanes(self):
        if self.nglobal1 % 2 != 0:
            raise InvalidGridError(
                "normal generation needs an even lane count (nglobal1)"
            )


class MatrixBuffer:
    """Row-major matrix of ncol logical columns inside a padded width npad.

    Cells beyond the first ncol columns are never written and excluded from
    comparisons.  A buffer built from a scalar length keeps `is_vector` so
    callers can flatten it back.
    """

    def __init__(self, nrow, ncol, npad=None, dtype=np.float64, is_vector=False):
        npad = ncol if npad is None else npad
        if nrow < 1 or ncol < 1:
            raise InvalidArgumentError("matrix dimensions must be >= 1")
        if npad < ncol:
            raise InvalidArgumentError("npad must be >= ncol")
        self.nrow = nrow
        self.ncol = ncol
        self.npad = npad
        self.is_vector = is_vector
        self.data = np.zeros((nrow, npad), dtype=dtype)

    @property
    def values(self) -> np.ndarray:
        """The logical nrow x ncol submatrix."""
        return self.data[:, : self.ncol]

    def vector(self) -> np.ndarray:
        return self.values.ravel()


def element_plan(grid: WorkGrid, nrow: int, ncol: int):
    """Cells owned by each work item, in the order its strided loops visit them.

    Item (i, j) owns {(r, c): r = i mod nglobal0, c = j mod nglobal1},
    row-major within its strided set.
    """
    plan = {}
    for i in range(grid.nglobal0):
        for j in range(grid.nglobal1):
            plan[(i, j)] = [
                (r, c)
                for r in range(i, nrow, grid.nglobal0)
                for c in range(j, ncol, grid.nglobal1)
            ]
    return plan


def stream_index(kernel_kind: str, grid: WorkGrid, i: int, j: int) -> int:
    """Stream ordinal of work item (i, j) under the given kernel's rule.

    The uniform/exponential kernels enumerate items column-major, the normal
    kernel row-major.
    """
    if not (0 <= i < grid.nglobal0 and 0 <= j < grid.nglobal1):
        raise InvalidArgumentError("work-item index outside the grid")
    if kernel_kind == UNIFORM_KERNEL:
        return i + grid.nglobal0 * j
    if kernel_kind == NORMAL_KERNEL:
        return i * grid.nglobal1 + j
    raise InvalidArgumentError(f"unknown kernel kind {kernel_kind!r}")


def _check_streams(streams: StreamSet, grid: WorkGrid):
    if streams.count < grid.size:
        raise InsufficientStreamsError(
            f"grid needs {grid.size} streams, got {streams.count}"
        )


def run_grid(streams, grid, nrow, ncol, kind, rate=1.0, npad=None, threads=None):
    """Fill an nrow x ncol matrix, advancing the used streams in place.

    kind is one of "uniform", "uniform-integer", "exponential", "normal".
    The output and the post-run stream states are a pure function of the
    inputs; `threads` only controls the worker pool size.
    """
    _check_streams(streams, grid)
    if threads is not None:
        _kernels.set_threads(threads)
    if kind == "normal":
        grid.require_paired_lanes()
        buf = MatrixBuffer(nrow, ncol, npad)
        _kernels.fill_normal(
            streams.current, buf.data.ravel(), nrow, ncol, buf.npad,
            grid.nglobal0, grid.nglobal1,
        )
    elif kind == "uniform-integer":
        buf = MatrixBuffer(nrow, ncol, npad, dtype=np.int64)
        _kernels.fill_integer(
            streams.current, buf.data.ravel(), nrow, ncol, buf.npad,
            grid.nglobal0, grid.nglobal1,
        )
    elif kind in ("uniform", "exponential"):
        buf = MatrixBuffer(nrow, ncol, npad)
        mode = 0 if kind == "uniform" else 1
        _kernels.fill_real(
            streams.current, buf.data.ravel(), nrow, ncol, buf.npad,
            grid.nglobal0, grid.nglobal1, mode, float(rate),
        )
    else:
        raise InvalidArgumentError(f"unknown fill kind {kind!r}")
    return buf
