"""FastAPI service exposing stream management, generation, Fisher and GRF."""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import core, distributions, fisher, grf
from .errors import NotPositiveDefiniteError, StreamforgeError
from .grid import WorkGrid


class StreamsModel(BaseModel):
    """Wire form of a stream set: n rows of six integers each."""

    current: list[list[int]]
    initial: list[list[int]]

    @classmethod
    def from_set(cls, s: core.StreamSet) -> "StreamsModel":
        return cls(current=s.current.tolist(), initial=s.initial.tolist())

    def to_set(self) -> core.StreamSet:
        s = core.StreamSet(
            np.asarray(self.current, dtype=np.int64),
            np.asarray(self.initial, dtype=np.int64),
        )
        s.validate()
        return s


class CreateStreamsRequest(BaseModel):
    n: int = Field(1024, ge=1)
    seed: Optional[list[int]] = None


class CreateStreamsResponse(BaseModel):
    streams: StreamsModel
    next_seed: list[int]


class GenerateRequest(BaseModel):
    streams: StreamsModel
    kind: Literal["uniform", "uniform-integer", "normal", "exponential"] = "uniform"
    n: Optional[int] = None
    dims: Optional[tuple[int, int]] = None
    grid: tuple[int, int] = (64, 8)
    rate: float = 1.0
    threads: Optional[int] = None


class GenerateResponse(BaseModel):
    values: list[list[float]]
    is_vector: bool
    streams: StreamsModel


class FisherRequest(BaseModel):
    table: list[list[int]]
    n: int = Field(..., ge=1)
    streams: StreamsModel
    grid: tuple[int, int] = (64, 16)
    return_statistics: bool = False
    threads: Optional[int] = None


class FisherResponse(BaseModel):
    threshold: float
    sim_num: int
    counts: int
    p_value: float
    statistics: Optional[list[float]] = None
    streams: StreamsModel


class GridSpecModel(BaseModel):
    ncell_x: int = Field(..., ge=1)
    ncell_y: int = Field(..., ge=1)
    cell_size: float = Field(..., gt=0)
    origin: tuple[float, float] = (0.0, 0.0)


class GrfRequest(BaseModel):
    params: list[list[float]]
    grid: GridSpecModel
    n_realizations: int = Field(1, ge=1)
    streams: StreamsModel
    work_grid: tuple[int, int] = (64, 8)
    threads: Optional[int] = None


class GrfResponse(BaseModel):
    # fields[batch][realization] is a ncell_y x ncell_x matrix
    fields: list[list[list[list[float]]]]
    streams: StreamsModel


app = FastAPI(
    title="streamforge",
    description="Reproducible parallel random number streams and simulations",
)


def _bad_request(exc: StreamforgeError):
    return HTTPException(status_code=422, detail=str(exc))


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/streams/create", response_model=CreateStreamsResponse)
def streams_create(req: CreateStreamsRequest):
    try:
        creator = core.set_base_creator(req.seed or core.DEFAULT_SEED)
        streams, creator = core.create_streams(creator, req.n)
    except StreamforgeError as exc:
        raise _bad_request(exc)
    return CreateStreamsResponse(
        streams=StreamsModel.from_set(streams),
        next_seed=list(creator.next_seed),
    )


@app.post("/generate", response_model=GenerateResponse)
def generate(req: GenerateRequest):
    if (req.n is None) == (req.dims is None):
        raise HTTPException(status_code=422, detail="give exactly one of n, dims")
    try:
        streams = req.streams.to_set()
        buf = distributions.fill(
            streams,
            distributions.FillRequest(
                shape=req.n if req.n is not None else req.dims,
                kind=req.kind,
                rate=req.rate,
                grid=WorkGrid(*req.grid),
                threads=req.threads,
            ),
        )
    except StreamforgeError as exc:
        raise _bad_request(exc)
    return GenerateResponse(
        values=buf.values.tolist(),
        is_vector=buf.is_vector,
        streams=StreamsModel.from_set(streams),
    )


@app.post("/fisher", response_model=FisherResponse)
def fisher_endpoint(req: FisherRequest):
    try:
        streams = req.streams.to_set()
        result = fisher.fisher_sim(
            np.asarray(req.table, dtype=np.int64),
            req.n,
            streams,
            grid=WorkGrid(*req.grid),
            return_stats=req.return_statistics,
            threads=req.threads,
        )
    except StreamforgeError as exc:
        raise _bad_request(exc)
    return FisherResponse(
        threshold=result.threshold,
        sim_num=result.sim_num,
        counts=result.counts,
        p_value=result.p_value,
        statistics=(
            result.statistics.tolist() if result.statistics is not None else None
        ),
        streams=StreamsModel.from_set(streams),
    )


@app.post("/grf", response_model=GrfResponse)
def grf_endpoint(req: GrfRequest):
    try:
        streams = req.streams.to_set()
        fields = grf.simulate_grf(
            req.params,
            grf.GridSpec(
                ncell_x=req.grid.ncell_x,
                ncell_y=req.grid.ncell_y,
                cell_size=req.grid.cell_size,
                origin=tuple(req.grid.origin),
            ),
            req.n_realizations,
            streams,
            WorkGrid(*req.work_grid),
            threads=req.threads,
        )
    except NotPositiveDefiniteError as exc:
        raise HTTPException(status_code=500, detail=str(exc))
    except StreamforgeError as exc:
        raise _bad_request(exc)
    return GrfResponse(
        fields=fields.tolist(),
        streams=StreamsModel.from_set(streams),
    )
