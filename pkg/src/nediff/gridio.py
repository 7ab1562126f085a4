"""Raw grid dumps.

Format: one ASCII header line
    NEDIFF1 nx ny dx dy x0 y0 t k0 E0\n
followed by little-endian float64 (re, im) pairs, row-major over y then x.
"""

from __future__ import annotations

import numpy as np

from .core import Grid2D, Wavepacket
from .errors import ConfigurationError

MAGIC = "NEDIFF1"


def write_grid(path, psi: Wavepacket) -> None:
    header = " ".join(
        [MAGIC, str(psi.grid.nx), str(psi.grid.ny)]
        + [repr(float(v)) for v in (
            psi.grid.dx, psi.grid.dy, psi.grid.x0, psi.grid.y0,
            psi.t, psi.k0, psi.energy_ev,
        )]
    )
    data = np.ascontiguousarray(psi.amplitudes, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(data.tobytes())


def read_grid(path) -> Wavepacket:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != MAGIC:
            raise ConfigurationError(f"{path}: not a {MAGIC} grid dump")
        if len(header) != 10:
            raise ConfigurationError(f"{path}: malformed header")
        nx, ny = int(header[1]), int(header[2])
        dx, dy, x0, y0, t, k0, _e0 = (float(v) for v in header[3:])
        raw = fh.read()
    expected = nx * ny * 16
    if len(raw) != expected:
        raise ConfigurationError(
            f"{path}: payload has {len(raw)} bytes, expected {expected}"
        )
    amps = np.frombuffer(raw, dtype="<c16").reshape(ny, nx).copy()
    grid = Grid2D(nx, ny, dx, dy, x0, y0)
    return Wavepacket(grid=grid, amplitudes=amps, t=t, k0=k0)
