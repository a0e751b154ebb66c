"""Uniform, normal and exponential fills on top of the grid engine.

A scalar length n is generated as a 1 x n matrix under the standard strided
element plan, which is the layout that reproduces the published example
values; only work items in grid row 0 then produce output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidArgumentError, InvalidRateError
from .grid import WorkGrid, run_grid

DEFAULT_GRID = WorkGrid(64, 8)

KINDS = ("uniform", "uniform-integer", "normal", "exponential")


@dataclass
class FillRequest:
    """Shape, distribution kind and grid for one fill."""

    shape: object                   # scalar n or (nrow, ncol)
    kind: str = "uniform"
    rate: float = 1.0               # exponential only
    grid: WorkGrid = field(default_factory=lambda: DEFAULT_GRID)
    npad: int | None = None
    threads: int | None = None

    def dims(self):
        """(nrow, ncol, is_vector) after validation."""
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown fill kind {self.kind!r}")
        if self.kind == "exponential" and not self.rate > 0:
            raise InvalidRateError("exponential rate must be > 0")
        shape = self.shape
        if isinstance(shape, int):
            shape = (1, shape)
            vector = True
        else:
            shape = tuple(int(x) for x in shape)
            if len(shape) == 1:
                shape = (1, shape[0])
                vector = True
            elif len(shape) == 2:
                vector = False
            else:
                raise InvalidArgumentError("shape must be n or (nrow, ncol)")
        if shape[0] < 1 or shape[1] < 1:
            raise InvalidArgumentError("fill dimensions must be >= 1")
        return shape[0], shape[1], vector


def _fill(streams, req: FillRequest, kind):
    nrow, ncol, vector = req.dims()
    buf = run_grid(
        streams, req.grid, nrow, ncol, kind,
        rate=req.rate, npad=req.npad, threads=req.threads,
    )
    buf.is_vector = vector
    return buf


def fill_uniform(streams, req: FillRequest):
    """U(0,1) doubles (kind "uniform") or raw integers in [1, 2^31 - 1]."""
    if req.kind not in ("uniform", "uniform-integer"):
        raise InvalidArgumentError("fill_uniform needs a uniform kind")
    return _fill(streams, req, req.kind)


def fill_normal(streams, req: FillRequest):
    """Standard normals via paired-lane Box-Muller; needs even nglobal1."""
    return _fill(streams, req, "normal")


def fill_exponential(streams, req: FillRequest):
    """Exponential(rate) via the inverse CDF -log(1 - u) / rate."""
    return _fill(streams, req, "exponential")


def fill(streams, req: FillRequest):
    """Dispatch on req.kind."""
    if req.kind == "normal":
        return fill_normal(streams, req)
    if req.kind == "exponential":
        return fill_exponential(streams, req)
    return fill_uniform(streams, req)
