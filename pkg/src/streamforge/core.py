"""MRG31k3p streams: recurrence, jump-ahead, stream creation and serialization.

The generator combines two order-3 linear recurrences:

    x1[n] = (2^22 * x1[n-2] + (2^7 + 1) * x1[n-3]) mod m1
    x2[n] = (2^15 * x2[n-1] + (2^15 + 1) * x2[n-3]) mod m2

with m1 = 2^31 - 1 and m2 = 2^31 - 21069.  The combined output is
(x1[n] - x2[n]) mod m1 mapped onto [1, m1].  Stream k starts 2^134 steps
after stream k-1, computed by modular matrix exponentiation rather than
iteration.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    CorruptStreamFileError,
    InvalidArgumentError,
    InvalidSeedError,
)

M1 = 2147483647          # 2^31 - 1, prime
M2 = 2147462579          # 2^31 - 21069, prime
NORM = 1.0 / 2147483648.0
STREAM_SPACING_LOG2 = 134     # consecutive streams are 2^134 steps apart
PERIOD_LOG2 = 185             # whole-generator period, approximately

# multipliers of the two recurrence components
A12 = 1 << 22
A13 = (1 << 7) + 1
B11 = 1 << 15
B13 = (1 << 15) + 1

DEFAULT_SEED = (12345, 12345, 12345, 12345, 12345, 12345)

# one-step transition matrices acting on (x[n-1], x[n-2], x[n-3])
_T1 = ((0, A12, A13), (1, 0, 0), (0, 1, 0))
_T2 = ((B11, 0, B13), (1, 0, 0), (0, 1, 0))


def _mat_mul(a, b, m):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) % m for j in range(3))
        for i in range(3)
    )


@lru_cache(maxsize=None)
def _jump_matrices(e: int):
    """Transition matrices of both components raised to the power 2^e."""
    j1, j2 = _T1, _T2
    for _ in range(e):
        j1 = _mat_mul(j1, j1, M1)
        j2 = _mat_mul(j2, j2, M2)
    return j1, j2


def _mat_vec(a, v, m):
    return tuple(sum(a[i][k] * v[k] for k in range(3)) % m for i in range(3))


def _check_triplet(v, m, what):
    if len(v) != 3:
        raise InvalidSeedError(f"{what} must have three components")
    for x in v:
        if not (0 <= int(x) < m):
            raise InvalidSeedError(f"{what} component {x} outside [0, {m - 1}]")
    if all(int(x) == 0 for x in v):
        raise InvalidSeedError(f"{what} must not be all zero")


def validate_seed(seed):
    """Check a six-integer seed against the per-component constraints."""
    seed = tuple(int(x) for x in seed)
    if len(seed) != 6:
        raise InvalidSeedError("seed must have six components")
    _check_triplet(seed[:3], M1, "component-1 seed")
    _check_triplet(seed[3:], M2, "component-2 seed")
    return seed


@dataclass(frozen=True)
class StreamState:
    """State of one stream: current and initial six-vectors."""

    g1: tuple
    g2: tuple
    initial_g1: tuple
    initial_g2: tuple

    @classmethod
    def from_seed(cls, seed):
        seed = validate_seed(seed)
        return cls(seed[:3], seed[3:], seed[:3], seed[3:])

    def validate(self):
        _check_triplet(self.g1, M1, "g1")
        _check_triplet(self.g2, M2, "g2")
        _check_triplet(self.initial_g1, M1, "initial_g1")
        _check_triplet(self.initial_g2, M2, "initial_g2")

    def as_row(self):
        """The twelve integers in file order."""
        return (*self.g1, *self.g2, *self.initial_g1, *self.initial_g2)


def next_state(s: StreamState):
    """Advance one step; return the new state and the output in [1, m1]."""
    y1 = (A12 * s.g1[1] + A13 * s.g1[2]) % M1
    g1 = (y1, s.g1[0], s.g1[1])
    y2 = (B11 * s.g2[0] + B13 * s.g2[2]) % M2
    g2 = (y2, s.g2[0], s.g2[1])
    z = (y1 - y2) % M1
    if z == 0:
        z = M1
    return StreamState(g1, g2, s.initial_g1, s.initial_g2), z


def jump_ahead(s: StreamState, e: int) -> StreamState:
    """State after 2^e steps, via repeated modular squaring."""
    if e < 0:
        raise InvalidArgumentError("jump exponent must be >= 0")
    j1, j2 = _jump_matrices(e)
    return StreamState(
        _mat_vec(j1, s.g1, M1),
        _mat_vec(j2, s.g2, M2),
        s.initial_g1,
        s.initial_g2,
    )


def _jump_seed(seed):
    """Advance a six-integer seed by one stream spacing (2^134 steps)."""
    j1, j2 = _jump_matrices(STREAM_SPACING_LOG2)
    return _mat_vec(j1, seed[:3], M1) + _mat_vec(j2, seed[3:], M2)


@dataclass(frozen=True)
class CreatorState:
    """Seed the next created stream will receive."""

    next_seed: tuple

    @classmethod
    def default(cls):
        return cls(DEFAULT_SEED)


def set_base_creator(seed=DEFAULT_SEED) -> CreatorState:
    """Set the initial state of the first stream that will be created."""
    return CreatorState(validate_seed(seed))


class StreamSet:
    """Ordered collection of streams, stored as two (n, 6) integer arrays."""

    def __init__(self, current: np.ndarray, initial: np.ndarray):
        current = np.ascontiguousarray(current, dtype=np.int64)
        initial = np.ascontiguousarray(initial, dtype=np.int64)
        if current.shape != initial.shape or current.ndim != 2 or current.shape[1] != 6:
            raise InvalidArgumentError("stream arrays must both be (n, 6)")
        if current.shape[0] < 1:
            raise InvalidArgumentError("a stream set needs at least one stream")
        self.current = current
        self.initial = initial

    @property
    def count(self) -> int:
        return self.current.shape[0]

    def __len__(self):
        return self.count

    def __getitem__(self, k) -> StreamState:
        c, i = self.current[k], self.initial[k]
        return StreamState(
            tuple(int(x) for x in c[:3]),
            tuple(int(x) for x in c[3:]),
            tuple(int(x) for x in i[:3]),
            tuple(int(x) for x in i[3:]),
        )

    def __iter__(self):
        return (self[k] for k in range(self.count))

    def set_state(self, k, state: StreamState):
        self.current[k] = state.as_row()[:6]
        self.initial[k] = state.as_row()[6:]

    def copy(self) -> "StreamSet":
        return StreamSet(self.current.copy(), self.initial.copy())

    def matrix(self) -> np.ndarray:
        """The 12 x n state matrix: rows 1-6 current, rows 7-12 initial."""
        return np.vstack([self.current.T, self.initial.T])

    def validate(self):
        for arr, what in ((self.current, "current"), (self.initial, "initial")):
            for side, m in ((arr[:, :3], M1), (arr[:, 3:], M2)):
                if (side < 0).any() or (side >= m).any():
                    raise CorruptStreamFileError(
                        f"{what} state integer outside [0, {m - 1}]"
                    )
                if (side == 0).all(axis=1).any():
                    raise CorruptStreamFileError(f"all-zero {what} state triplet")

    def __eq__(self, other):
        if not isinstance(other, StreamSet):
            return NotImplemented
        return np.array_equal(self.current, other.current) and np.array_equal(
            self.initial, other.initial
        )


def create_streams(creator: CreatorState, n: int):
    """Create n consecutive streams; returns (StreamSet, advanced creator).

    Stream k receives the creator seed jumped ahead k stream spacings; its
    current state equals its initial state on creation.
    """
    if n < 1:
        raise InvalidArgumentError("number of streams to create must be >= 1")
    seed = validate_seed(creator.next_seed)
    rows = np.empty((n, 6), dtype=np.int64)
    for k in range(n):
        rows[k] = seed
        seed = _jump_seed(seed)
    return StreamSet(rows.copy(), rows), CreatorState(seed)


FILE_MAGIC = "streamforge-streams"
FILE_VERSION = "v1"


def save_streams(streams: StreamSet, sink):
    """Write the owned text format: a header line then 12 integers per stream."""
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            save_streams(streams, fh)
        return
    sink.write(f"{FILE_MAGIC} {FILE_VERSION} count={streams.count}\n")
    for cur, ini in zip(streams.current, streams.initial):
        sink.write(" ".join(str(int(x)) for x in (*cur, *ini)) + "\n")


def save_streams_atomic(streams: StreamSet, path):
    """Save via temp-file-and-rename so interrupted writes never corrupt state."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        save_streams(streams, fh)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_streams(source) -> StreamSet:
    """Read the owned format back; generation resumes from current states."""
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return load_streams(fh)
    if isinstance(source, str):
        source = io.StringIO(source)
    header = source.readline().split()
    if (
        len(header) != 3
        or header[0] != FILE_MAGIC
        or header[1] != FILE_VERSION
        or not header[2].startswith("count=")
    ):
        raise CorruptStreamFileError("bad stream file header")
    try:
        count = int(header[2][len("count="):])
    except ValueError:
        raise CorruptStreamFileError("bad stream count in header") from None
    if count < 1:
        raise CorruptStreamFileError("stream count must be >= 1")
    current = np.empty((count, 6), dtype=np.int64)
    initial = np.empty((count, 6), dtype=np.int64)
    for k in range(count):
        line = source.readline()
        if not line:
            raise CorruptStreamFileError(f"truncated file: expected {count} streams")
        parts = line.split()
        if len(parts) != 12:
            raise CorruptStreamFileError(f"stream {k + 1}: expected 12 integers")
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise CorruptStreamFileError(f"stream {k + 1}: non-integer entry") from None
        current[k] = vals[:6]
        initial[k] = vals[6:]
    extra = source.readline()
    if extra.strip():
        raise CorruptStreamFileError("trailing data after last stream")
    out = StreamSet(current, initial)
    out.validate()
    return out
