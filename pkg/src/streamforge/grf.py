"""Batched simulation of anisotropic Matern Gaussian random fields.

Pipeline per parameter set: build the covariance between grid-cell centres,
factor it as L * diag(D) * L^T with unit-lower-triangular L, then map shared
standard normals through L * diag(sqrt(D)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf
from scipy.spatial.distance import pdist
from scipy.special import gammaln, kv

from .core import StreamSet
from .distributions import FillRequest, fill_normal
from .errors import (
    InvalidArgumentError,
    InvalidParamsError,
    InvalidShapesError,
    NotPositiveDefiniteError,
)
from .grid import WorkGrid

PARAM_COLUMNS = ("shape", "range", "variance", "anisoRatio", "anisoAngleRadians")


@dataclass(frozen=True)
class MaternParams:
    """Shape kappa, range phi, variance sigma^2 and geometric anisotropy."""

    shape: float
    range: float
    variance: float
    aniso_ratio: float = 1.0
    aniso_angle: float = 0.0

    def __post_init__(self):
        if not (self.shape > 0 and self.range > 0 and self.variance > 0):
            raise InvalidParamsError("shape, range and variance must be > 0")
        if not self.aniso_ratio >= 1.0:
            raise InvalidParamsError("anisotropy ratio must be >= 1")

    @classmethod
    def from_row(cls, row):
        row = tuple(float(x) for x in row)
        if len(row) != 5:
            raise InvalidParamsError("a parameter row needs five values")
        return cls(*row)


@dataclass(frozen=True)
class GridSpec:
    """Regular grid of cell centres, cells enumerated row-major."""

    ncell_x: int
    ncell_y: int
    cell_size: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.ncell_x < 1 or self.ncell_y < 1:
            raise InvalidArgumentError("grid dimensions must be >= 1")
        if not self.cell_size > 0:
            raise InvalidArgumentError("cell size must be > 0")

    @property
    def ncell(self) -> int:
        return self.ncell_x * self.ncell_y

    def cell_coords(self) -> np.ndarray:
        """(n, 2) centre coordinates, row-major over (y, x)."""
        ix = np.arange(self.ncell_x)
        iy = np.arange(self.ncell_y)
        xs = self.origin[0] + (ix + 0.5) * self.cell_size
        ys = self.origin[1] + (iy + 0.5) * self.cell_size
        xx, yy = np.meshgrid(xs, ys)
        return np.column_stack([xx.ravel(), yy.ravel()])


class BatchedMatrix:
    """B square n x n blocks stacked by row into a (B*n, n) array."""

    def __init__(self, data: np.ndarray, batch_count: int):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or batch_count < 1 or data.shape[0] % batch_count:
            raise InvalidShapesError("stacked data must be (B*n, ncol)")
        self.data = data
        self.batch_count = batch_count
        self.n = data.shape[0] // batch_count

    def block(self, b: int) -> np.ndarray:
        return self.data[b * self.n : (b + 1) * self.n]

    @classmethod
    def empty(cls, batch_count, n, ncol=None):
        ncol = n if ncol is None else ncol
        return cls(np.empty((batch_count * n, ncol)), batch_count)


class DiagBatch:
    """Row b holds the diagonal of D_b."""

    def __init__(self, data: np.ndarray):
        self.data = np.asarray(data, dtype=np.float64)
        if self.data.ndim != 2:
            raise InvalidShapesError("diagonal batch must be (B, n)")

    @property
    def batch_count(self):
        return self.data.shape[0]


def bessel_k(order: float, x) -> np.ndarray | float:
    """Modified Bessel function of the second kind K_order(x), x > 0."""
    if not order > 0:
        raise InvalidArgumentError("Bessel order must be > 0")
    arr = np.asarray(x, dtype=np.float64)
    if (arr <= 0).any():
        raise InvalidArgumentError("Bessel argument must be > 0")
    out = kv(order, arr)
    return float(out) if np.isscalar(x) else out


def _anisotropic_coords(coords, params: MaternParams):
    # rotate by theta, then stretch the weak direction by omega
    c, s = math.cos(params.aniso_angle), math.sin(params.aniso_angle)
    rot = np.array([[c, -s], [s, c]])
    scale = np.array([[1.0, 0.0], [0.0, params.aniso_ratio]])
    return coords @ (scale @ rot).T


def matern_correlation(params: MaternParams, dist) -> np.ndarray:
    """Correlation at (transformed) distance dist; 1 at zero distance."""
    dist = np.asarray(dist, dtype=np.float64)
    kappa = params.shape
    arg = math.sqrt(8.0 * kappa) * dist / params.range
    out = np.ones_like(arg)
    pos = arg > 0
    a = arg[pos]
    # 2^(1-kappa)/Gamma(kappa) * a^kappa * K_kappa(a), evaluated in logs
    out[pos] = np.exp(
        (1.0 - kappa) * math.log(2.0)
        - gammaln(kappa)
        + kappa * np.log(a)
    ) * kv(kappa, a)
    return out


def _params_list(params_list):
    out = []
    for p in params_list:
        out.append(p if isinstance(p, MaternParams) else MaternParams.from_row(p))
    if not out:
        raise InvalidParamsError("need at least one parameter set")
    return out


def matern_cov(params_list, coords) -> BatchedMatrix:
    """One covariance block per parameter set, stacked by row.

    `coords` is an (n, 2) coordinate array or a GridSpec (cells row-major).
    The diagonal is exactly the variance; off-diagonal entries are computed
    on the upper triangle and mirrored, so each block is exactly symmetric.
    """
    params_list = _params_list(params_list)
    if isinstance(coords, GridSpec):
        coords = coords.cell_coords()
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise InvalidArgumentError("coords must be (n, 2)")
    n = coords.shape[0]
    out = BatchedMatrix.empty(len(params_list), n)
    iu = np.triu_indices(n, k=1)
    for b, params in enumerate(params_list):
        tc = _anisotropic_coords(coords, params)
        dist = pdist(tc)                      # condensed upper triangle
        cov = params.variance * matern_correlation(params, dist)
        block = out.block(b)
        block[:] = 0.0
        block[iu] = cov
        block += block.T
        np.fill_diagonal(block, params.variance)
    return out


def chol_batch(cov: BatchedMatrix):
    """Per-block LDL^T: unit-lower-triangular L and positive diagonal D.

    Backed by LAPACK Cholesky (C C^T with L = C/diag(C), D = diag(C)^2).
    Raises NotPositiveDefiniteError naming the batch and failing pivot.
    """
    n = cov.n
    lmat = BatchedMatrix.empty(cov.batch_count, n)
    diag = np.empty((cov.batch_count, n))
    for b in range(cov.batch_count):
        c, info = dpotrf(cov.block(b), lower=1, clean=1, overwrite_a=0)
        if info != 0:
            raise NotPositiveDefiniteError(batch=b, pivot=int(info))
        d = np.diagonal(c).copy()
        block = lmat.block(b)
        block[:] = c / d[np.newaxis, :]
        np.fill_diagonal(block, 1.0)
        diag[b] = d * d
    return lmat, DiagBatch(diag)


def multiply_lower_diag_batch(lmat: BatchedMatrix, diag: DiagBatch, z,
                              transform: str = "sqrt") -> BatchedMatrix:
    """Output block b = L_b * diag(transform(D_b)) * Z_b.

    Z may have n rows (shared by every batch) or B*n rows (each batch
    consumes its own slice).  transform is "sqrt" or "identity".
    """
    if transform not in ("sqrt", "identity"):
        raise InvalidArgumentError("transform must be 'sqrt' or 'identity'")
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, np.newaxis]
    n = lmat.n
    batches = lmat.batch_count
    if diag.data.shape != (batches, n):
        raise InvalidShapesError("diagonal batch does not match L")
    if z.shape[0] == n:
        z_block = lambda b: z
    elif z.shape[0] == batches * n:
        z_block = lambda b: z[b * n : (b + 1) * n]
    else:
        raise InvalidShapesError(
            f"Z must have {n} or {batches * n} rows, got {z.shape[0]}"
        )
    out = BatchedMatrix.empty(batches, n, z.shape[1])
    for b in range(batches):
        d = diag.data[b]
        scale = np.sqrt(d) if transform == "sqrt" else d
        out.block(b)[:] = lmat.block(b) @ (scale[:, np.newaxis] * z_block(b))
    return out


def simulate_grf(
    params_list,
    grid: GridSpec,
    n_realizations: int,
    streams: StreamSet,
    work_grid: WorkGrid,
    threads: int | None = None,
) -> np.ndarray:
    """Simulate Matern fields; returns (B, n_realizations, ncell_y, ncell_x).

    Normals are drawn as one (B*n, n_realizations) fill so each batch
    consumes its own n-row slice; output ordering is batch-major, then
    realization.
    """
    params_list = _params_list(params_list)
    if n_realizations < 1:
        raise InvalidArgumentError("n_realizations must be >= 1")
    cov = matern_cov(params_list, grid)
    lmat, diag = chol_batch(cov)
    zbuf = fill_normal(
        streams,
        FillRequest(
            shape=(cov.data.shape[0], n_realizations),
            kind="normal",
            grid=work_grid,
            threads=threads,
        ),
    )
    sim = multiply_lower_diag_batch(lmat, diag, zbuf.values, transform="sqrt")
    n = grid.ncell
    fields = np.empty((len(params_list), n_realizations, grid.ncell_y, grid.ncell_x))
    for b in range(len(params_list)):
        block = sim.block(b)
        for r in range(n_realizations):
            fields[b, r] = block[:, r].reshape(grid.ncell_y, grid.ncell_x)
    return fields
