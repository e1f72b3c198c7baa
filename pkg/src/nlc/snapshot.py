"""Binary field snapshots.

Layout: one ASCII header line

    NLC1 dim=<d> sizes=<m1,..> length=<l1,..> time=<t> lambda=<lam>

terminated by ``\\n``, followed by little-endian float64 arrays in C order:
rho, u_1..u_d, n_1..n_3 and optionally p.  Floats in the header use ``repr`` so
the round trip is bit-exact.  Incompressible states are written with rho = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import DirectorField, Grid, ScalarField, VectorField
from .state import CompressibleState, IncompressibleState, ModelParams

MAGIC = "NLC1"
_LE = np.dtype("<f8")


class SnapshotFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Snapshot:
    grid: Grid
    time: float
    lam: float
    rho: np.ndarray
    u: np.ndarray
    n: np.ndarray
    p: np.ndarray | None = None

    def compressible(self, params: ModelParams) -> CompressibleState:
        g = self.grid
        return CompressibleState(self.time, ScalarField(g, self.rho), VectorField(g, self.u), DirectorField(g, self.n), params)

    def incompressible(self, params: ModelParams) -> IncompressibleState:
        g = self.grid
        p = ScalarField(g, self.p) if self.p is not None else None
        return IncompressibleState(self.time, VectorField(g, self.u), DirectorField(g, self.n), p, params)


def _header(grid: Grid, time: float, lam: float) -> bytes:
    sizes = ",".join(str(m) for m in grid.sizes)
    length = ",".join(repr(float(x)) for x in grid.length)
    return f"{MAGIC} dim={grid.dim} sizes={sizes} length={length} time={float(time)!r} lambda={float(lam)!r}\n".encode("ascii")


def write_snapshot(path, state, lam: float | None = None) -> None:
    """Write a compressible or incompressible state (the latter with rho = 1 and optional p)."""
    g = state.grid
    if isinstance(state, CompressibleState):
        rho, p = state.rho.values, None
    elif isinstance(state, IncompressibleState):
        rho, p = np.ones(g.shape), (state.p.values if state.p is not None else None)
    else:
        raise TypeError(f"cannot snapshot {type(state).__name__}")
    lam = state.params.lam if lam is None else lam
    blocks = [rho[None], state.u.values, state.n.values]
    if p is not None:
        blocks.append(p[None])
    payload = np.ascontiguousarray(np.concatenate(blocks), dtype=_LE)
    with Path(path).open("wb") as fh:
        fh.write(_header(g, state.time, lam))
        fh.write(payload.tobytes(order="C"))


def read_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise SnapshotFormatError("missing header line")
    fields = raw[:nl].decode("ascii").split()
    if not fields or fields[0] != MAGIC:
        raise SnapshotFormatError(f"bad magic {fields[:1]}")
    kv = dict(f.split("=", 1) for f in fields[1:])
    try:
        dim = int(kv["dim"])
        sizes = tuple(int(x) for x in kv["sizes"].split(","))
        length = tuple(float(x) for x in kv["length"].split(","))
        time = float(kv["time"])
        lam = float(kv["lambda"])
    except (KeyError, ValueError) as exc:
        raise SnapshotFormatError(f"malformed header: {exc}") from exc
    if len(sizes) != dim:
        raise SnapshotFormatError("dim does not match sizes")
    grid = Grid(sizes, length)
    data = np.frombuffer(raw, dtype=_LE, offset=nl + 1)
    ncell = grid.ncells
    nfields, rem = divmod(data.size, ncell)
    base = 1 + dim + 3
    if rem or nfields not in (base, base + 1):
        raise SnapshotFormatError(f"payload holds {data.size} floats; expected {base} or {base + 1} fields of {ncell}")
    arr = data.reshape((nfields,) + grid.shape).astype(float)
    p = arr[base] if nfields == base + 1 else None
    return Snapshot(grid, time, lam, arr[0], arr[1 : 1 + dim], arr[1 + dim : base], p)
