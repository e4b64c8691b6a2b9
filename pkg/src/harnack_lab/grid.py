"""Periodic grids on flat tori and the field containers living on them.

The unit cell is [0, L)^dim sampled at N points per axis, x_i = i*L/N, with
the periodic identification x + L ~ x.  All differentiation elsewhere in the
package is spectral, so N is kept a power of two for the FFTs.

Snapshot files are plain text: one JSON header line followed by the field
values as comma-separated 64-bit decimals in row-major order (one line per
grid row).  Symmetric tensors use the same layout with one block of rows per
component and a "components" list in the header.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "TensorField",
    "write_snapshot",
    "read_snapshot",
    "write_tensor_snapshot",
    "read_tensor_snapshot",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: dim in {1, 2}, N points per axis, cell length L."""

    dim: int
    N: int
    L: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.N < 16 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive and finite, got {self.L}")

    @property
    def h(self) -> float:
        """Grid spacing L/N."""
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.dim

    @property
    def npoints(self) -> int:
        return self.N**self.dim

    def axis_coords(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    def coords(self):
        """Coordinate array(s): x for dim=1, (X, Y) meshes for dim=2."""
        x = self.axis_coords()
        if self.dim == 1:
            return x
        return np.meshgrid(x, x, indexing="ij")

    def point_coord(self, idx):
        """Physical coordinate of a grid index (int for dim=1, pair for dim=2)."""
        if self.dim == 1:
            return float(int(idx) % self.N) * self.h
        i, j = idx
        return (float(int(i) % self.N) * self.h, float(int(j) % self.N) * self.h)


@dataclass
class ScalarField:
    """Real scalar samples on a grid at a fixed time."""

    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v
        self.t = float(self.t)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.t)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass
class TensorField:
    """Symmetric 2-tensor samples: one component for dim=1, (11, 12, 22) for dim=2.

    Symmetry is exact by storage; only the independent components are kept.
    """

    grid: Grid
    t: float
    comps: tuple

    def __post_init__(self):
        want = 1 if self.grid.dim == 1 else 3
        if len(self.comps) != want:
            raise ValueError(f"expected {want} components for dim={self.grid.dim}")
        comps = []
        for c in self.comps:
            c = np.ascontiguousarray(np.asarray(c, dtype=float))
            if c.shape != self.grid.shape:
                raise ValueError("component shape does not match grid")
            if not np.all(np.isfinite(c)):
                raise ValueError("tensor components must be finite")
            comps.append(c)
        self.comps = tuple(comps)
        self.t = float(self.t)

    @property
    def component_names(self) -> list:
        return ["11"] if self.grid.dim == 1 else ["11", "12", "22"]

    def trace(self) -> np.ndarray:
        if self.grid.dim == 1:
            return self.comps[0]
        return self.comps[0] + self.comps[2]

    def eig_bounds(self):
        """(lambda_min, lambda_max) fields via the closed 2x2 form."""
        if self.grid.dim == 1:
            a = self.comps[0]
            return a, a
        t11, t12, t22 = self.comps
        mean = 0.5 * (t11 + t22)
        radius = np.hypot(0.5 * (t11 - t22), t12)
        return mean - radius, mean + radius

    def spectral_radius(self) -> np.ndarray:
        lo, hi = self.eig_bounds()
        return np.maximum(np.abs(lo), np.abs(hi))


# ---------------------------------------------------------------------------
# Spectral symbols, cached per grid signature.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _spectral_tables(dim: int, N: int, L: float) -> dict:
    """Fourier multipliers on the rfft layout for one grid signature.

    Odd-derivative multipliers zero the (unpaired) Nyquist mode so that the
    inverse transforms stay real.
    """
    h = L / N
    k_full = 2.0 * np.pi * np.fft.fftfreq(N, d=h)
    k_half = 2.0 * np.pi * np.fft.rfftfreq(N, d=h)
    k_full_odd = k_full.copy()
    k_full_odd[N // 2] = 0.0
    k_half_odd = k_half.copy()
    k_half_odd[-1] = 0.0
    if dim == 1:
        return {
            "lap_symbol": k_half**2,
            "dx": 1j * k_half_odd,
            "dxx": -(k_half**2),
        }
    kx = k_full[:, None]
    ky = k_half[None, :]
    kx_o = k_full_odd[:, None]
    ky_o = k_half_odd[None, :]
    return {
        "lap_symbol": kx**2 + ky**2,
        "dx": 1j * kx_o,
        "dy": 1j * ky_o,
        "dxx": -(kx**2),
        "dyy": -(ky**2),
        "dxy": -(kx_o * ky_o),
    }


def spectral_tables(grid: Grid) -> dict:
    return _spectral_tables(grid.dim, grid.N, grid.L)


def laplacian_symbol(grid: Grid) -> np.ndarray:
    """|xi|^2 on the rfft spectrum of this grid."""
    return spectral_tables(grid)["lap_symbol"]


# ---------------------------------------------------------------------------
# Snapshot file I/O.
# ---------------------------------------------------------------------------

def _format_row(row) -> str:
    return ",".join(repr(float(v)) for v in row)


def _value_lines(values: np.ndarray, dim: int) -> list:
    if dim == 1:
        return [_format_row(values)]
    return [_format_row(row) for row in values]


def _parse_values(lines, count: int, what: str) -> np.ndarray:
    tokens = []
    for line in lines:
        line = line.strip()
        if line:
            tokens.extend(line.split(","))
    if len(tokens) != count:
        raise ValueError(f"corrupt {what}: expected {count} values, found {len(tokens)}")
    try:
        return np.array([float(tok) for tok in tokens], dtype=float)
    except ValueError as exc:
        raise ValueError(f"corrupt {what}: {exc}") from None


def _read_header(line: str, path) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt snapshot header in {path}: {exc}") from None
    if not isinstance(header, dict):
        raise ValueError(f"corrupt snapshot header in {path}: not an object")
    for key in ("t", "dim", "N", "L"):
        if key not in header:
            raise ValueError(f"corrupt snapshot header in {path}: missing {key!r}")
    return header


def write_snapshot(fld: ScalarField, path, p=None) -> None:
    """Write one scalar snapshot: JSON header line, then the values."""
    g = fld.grid
    header = {"t": fld.t, "dim": g.dim, "N": g.N, "L": g.L, "p": p}
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    lines.extend(_value_lines(fld.values, g.dim))
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path):
    """Read a scalar snapshot; returns (ScalarField, header dict)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"corrupt snapshot {path}: empty file")
    header = _read_header(lines[0], path)
    grid = Grid(int(header["dim"]), int(header["N"]), float(header["L"]))
    flat = _parse_values(lines[1:], grid.npoints, f"snapshot {path}")
    fld = ScalarField(grid, flat.reshape(grid.shape), float(header["t"]))
    return fld, header


def write_tensor_snapshot(tf: TensorField, path, p=None) -> None:
    """Tensor variant of the snapshot format: one value block per component."""
    g = tf.grid
    header = {
        "t": tf.t,
        "dim": g.dim,
        "N": g.N,
        "L": g.L,
        "p": p,
        "components": tf.component_names,
    }
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for comp in tf.comps:
        lines.extend(_value_lines(comp, g.dim))
    Path(path).write_text("\n".join(lines) + "\n")


def read_tensor_snapshot(path):
    """Read a tensor snapshot; returns (TensorField, header dict)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"corrupt snapshot {path}: empty file")
    header = _read_header(lines[0], path)
    names = header.get("components")
    if not isinstance(names, list) or not names:
        raise ValueError(f"corrupt tensor snapshot {path}: missing components list")
    grid = Grid(int(header["dim"]), int(header["N"]), float(header["L"]))
    flat = _parse_values(lines[1:], grid.npoints * len(names), f"tensor snapshot {path}")
    comps = tuple(
        flat[i * grid.npoints : (i + 1) * grid.npoints].reshape(grid.shape)
        for i in range(len(names))
    )
    tf = TensorField(grid, float(header["t"]), comps)
    if tf.component_names != names:
        raise ValueError(f"corrupt tensor snapshot {path}: components {names}")
    return tf, header
