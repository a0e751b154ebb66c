"""Command-line entry point.

Exit codes: 0 success, 2 usage/validation, 3 I/O failure, 4 numerical
failure.  Stream files are rewritten in place (temp file + rename) after any
generation so interrupted runs never corrupt stream state.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import sys

import click
import numpy as np

from . import core, distributions, fisher as fisher_mod, grf as grf_mod
from .errors import NotPositiveDefiniteError, StreamforgeError
from .grid import WorkGrid

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

FLOAT_FMT = "%.17g"      # round-trip exact for doubles


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_pair(value, what):
    parts = value.lower().split("x")
    if len(parts) != 2:
        _fail(EXIT_VALIDATION, f"{what} must look like 64x8, got {value!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        _fail(EXIT_VALIDATION, f"{what} must be two integers, got {value!r}")


def _parse_seed(value):
    try:
        seed = tuple(int(p) for p in value.split(","))
    except ValueError:
        _fail(EXIT_VALIDATION, f"seed must be six comma-separated integers")
    if len(seed) != 6:
        _fail(EXIT_VALIDATION, "seed must have six components")
    return seed


def _default_threads():
    raw = os.environ.get("STREAMFORGE_THREADS")
    if raw is None:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def _load_streams(path):
    try:
        return core.load_streams(path)
    except StreamforgeError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


def _save_streams(streams, path):
    try:
        core.save_streams_atomic(streams, path)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


def _read_int_table(path):
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    if not rows:
        _fail(EXIT_VALIDATION, f"{path}: empty table")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        _fail(EXIT_VALIDATION, f"{path}: ragged CSV")
    try:
        return np.array([[int(v) for v in row] for row in rows], dtype=np.int64)
    except ValueError:
        _fail(EXIT_VALIDATION, f"{path}: non-integer entry")


def _write_csv(path, matrix):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in np.atleast_2d(matrix):
                writer.writerow([FLOAT_FMT % v for v in row])
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


@click.group()
def main():
    """Reproducible parallel random number streams and simulations."""


@main.group()
def streams():
    """Create and inspect stream files."""


@streams.command("create")
@click.option("--n", default=1024, show_default=True, help="Number of streams.")
@click.option("--seed", default=None, help="Six comma-separated integers.")
@click.option("--out", required=True, type=click.Path())
@click.option("--force", is_flag=True, help="Overwrite an existing file.")
def streams_create(n, seed, out, force):
    """Create N consecutive streams and write the stream file."""
    if os.path.exists(out) and not force:
        _fail(EXIT_VALIDATION, f"{out} exists; use --force to overwrite")
    seed6 = _parse_seed(seed) if seed else core.DEFAULT_SEED
    try:
        creator = core.set_base_creator(seed6)
        stream_set, _ = core.create_streams(creator, n)
    except StreamforgeError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    _save_streams(stream_set, out)
    click.echo(f"wrote {stream_set.count} streams to {out}")


@streams.command("info")
@click.option("--file", "path", required=True, type=click.Path())
def streams_info(path):
    """Print the 12 x n state matrix of a stream file."""
    stream_set = _load_streams(path)
    matrix = stream_set.matrix()
    click.echo(f"{stream_set.count} streams")
    for row in matrix:
        click.echo(" ".join(f"{int(v):>10d}" for v in row))


@main.command()
@click.option("--kind", default="uniform", show_default=True,
              type=click.Choice(["uniform", "uniform-integer", "normal",
                                 "exponential"]))
@click.option("--n", type=int, default=None, help="Vector length.")
@click.option("--dims", default=None, help="Matrix dims, e.g. 2x4.")
@click.option("--grid", default="64x8", show_default=True, help="Work grid.")
@click.option("--rate", default=1.0, show_default=True)
@click.option("--streams", "streams_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--threads", type=int, default=None)
def generate(kind, n, dims, grid, rate, streams_path, out, threads):
    """Fill a vector or matrix and advance the stream file in place."""
    if (n is None) == (dims is None):
        _fail(EXIT_VALIDATION, "give exactly one of --n and --dims")
    shape = n if n is not None else _parse_pair(dims, "--dims")
    g0, g1 = _parse_pair(grid, "--grid")
    stream_set = _load_streams(streams_path)
    try:
        buf = distributions.fill(
            stream_set,
            distributions.FillRequest(
                shape=shape,
                kind=kind,
                rate=rate,
                grid=WorkGrid(g0, g1),
                threads=threads if threads is not None else _default_threads(),
            ),
        )
    except StreamforgeError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    _write_csv(out, buf.vector()[np.newaxis, :] if buf.is_vector else buf.values)
    _save_streams(stream_set, streams_path)


@main.command()
@click.option("--table", "table_path", required=True, type=click.Path())
@click.option("--n", required=True, type=int, help="Requested replicates.")
@click.option("--grid", default="64x16", show_default=True)
@click.option("--streams", "streams_path", required=True, type=click.Path())
@click.option("--stats-out", default=None, type=click.Path(),
              help="CSV of all simulated statistics.")
@click.option("--threads", type=int, default=None)
def fisher(table_path, n, grid, streams_path, stats_out, threads):
    """Monte Carlo Fisher exact test on a CSV contingency table."""
    table = _read_int_table(table_path)
    g0, g1 = _parse_pair(grid, "--grid")
    stream_set = _load_streams(streams_path)
    try:
        result = fisher_mod.fisher_sim(
            table,
            n,
            stream_set,
            grid=WorkGrid(g0, g1),
            return_stats=stats_out is not None,
            threads=threads if threads is not None else _default_threads(),
        )
    except StreamforgeError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(f"threshold={FLOAT_FMT % result.threshold}")
    click.echo(f"simNum={result.sim_num}")
    click.echo(f"counts={result.counts}")
    click.echo(f"p.value={FLOAT_FMT % result.p_value}")
    if stats_out is not None:
        _write_csv(stats_out, result.statistics[np.newaxis, :])
    _save_streams(stream_set, streams_path)


def _read_params(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    if not rows:
        _fail(EXIT_VALIDATION, f"{path}: empty parameter file")
    header = [h.strip() for h in rows[0]]
    for col in grf_mod.PARAM_COLUMNS:
        if col not in header:
            _fail(EXIT_VALIDATION, f"{path}: missing column {col!r}")
    idx = [header.index(col) for col in grf_mod.PARAM_COLUMNS]
    params = []
    for row in rows[1:]:
        if not row:
            continue
        try:
            params.append([float(row[i]) for i in idx])
        except (ValueError, IndexError):
            _fail(EXIT_VALIDATION, f"{path}: bad parameter row {row!r}")
    if not params:
        _fail(EXIT_VALIDATION, f"{path}: no parameter rows")
    return params


def _write_field_bin(path, field):
    header = struct.pack("<IIQ", field.shape[0], field.shape[1], field.size)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(field, dtype="<f8").tobytes())
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


@main.command()
@click.option("--params", "params_path", required=True, type=click.Path())
@click.option("--ncell-x", required=True, type=int)
@click.option("--ncell-y", required=True, type=int)
@click.option("--cell-size", required=True, type=float)
@click.option("--origin", default="0,0", show_default=True)
@click.option("--realizations", default=1, show_default=True, type=int)
@click.option("--grid", default="64x8", show_default=True, help="Work grid.")
@click.option("--streams", "streams_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--format", "fmt", default="csv", show_default=True,
              type=click.Choice(["csv", "bin"]))
@click.option("--threads", type=int, default=None)
def grf(params_path, ncell_x, ncell_y, cell_size, origin, realizations, grid,
        streams_path, out_dir, fmt, threads):
    """Simulate Matern Gaussian random fields, one file per realization."""
    params = _read_params(params_path)
    try:
        ox, oy = (float(v) for v in origin.split(","))
    except ValueError:
        _fail(EXIT_VALIDATION, f"--origin must be x,y, got {origin!r}")
    g0, g1 = _parse_pair(grid, "--grid")
    stream_set = _load_streams(streams_path)
    try:
        spec = grf_mod.GridSpec(
            ncell_x=ncell_x, ncell_y=ncell_y, cell_size=cell_size,
            origin=(ox, oy),
        )
        fields = grf_mod.simulate_grf(
            params,
            spec,
            realizations,
            stream_set,
            WorkGrid(g0, g1),
            threads=threads if threads is not None else _default_threads(),
        )
    except NotPositiveDefiniteError as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    except StreamforgeError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    manifest = []
    for b in range(fields.shape[0]):
        for r in range(fields.shape[1]):
            name = f"field_p{b + 1}_r{r + 1}.{fmt}"
            path = os.path.join(out_dir, name)
            if fmt == "csv":
                _write_csv(path, fields[b, r])
            else:
                _write_field_bin(path, fields[b, r])
            manifest.append({
                "file": name,
                "parameter_row": b + 1,
                "realization": r + 1,
                "params": dict(zip(grf_mod.PARAM_COLUMNS, params[b])),
            })
    try:
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    _save_streams(stream_set, streams_path)
    click.echo(f"wrote {len(manifest)} field files to {out_dir}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("streamforge.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
