"""Uniform periodic grids and sampled complex wave fields.

The computational domain is the box [-L, L)^n sampled with N points per
axis (spacing 2L/N).  Spectral operations use the matching FFT wavenumber
lattice, so every field is implicitly treated as 2L-periodic; callers are
expected to keep fields negligibly small near the boundary (see
``boundary_ratio``).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<qqdd")  # dimension, points per axis, half width, time


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on [-half_width, half_width)^dimension."""

    dimension: int
    half_width: float
    points_per_dim: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.points_per_dim < 16 or self.points_per_dim % 2:
            raise ValueError(
                f"points_per_dim must be an even integer >= 16, got {self.points_per_dim}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def shape(self) -> tuple:
        return (self.points_per_dim,) * self.dimension

    def axis(self) -> np.ndarray:
        """Sample positions along one axis: -L, -L+h, ..., L-h."""
        return -self.half_width + self.spacing * np.arange(self.points_per_dim)

    def mesh(self) -> tuple:
        """Coordinate arrays (one per axis) broadcast to the full shape."""
        return tuple(np.meshgrid(*([self.axis()] * self.dimension), indexing="ij"))

    def wavenumbers(self) -> tuple:
        """FFT angular wavenumbers per axis, broadcast to the full shape."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.spacing)
        return tuple(np.meshgrid(*([k1] * self.dimension), indexing="ij"))

    def kmax(self) -> float:
        """Largest resolvable angular wavenumber magnitude along one axis."""
        return np.pi / self.spacing

    def radius_sq(self) -> np.ndarray:
        return sum(x * x for x in self.mesh())

    def volume_element(self) -> float:
        return self.spacing**self.dimension


@dataclass
class WaveField:
    """Complex amplitudes sampled on a grid at a single time."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.values.copy(), self.time, dict(self.meta))

    def with_values(self, values, time=None) -> "WaveField":
        return WaveField(
            self.grid, values, self.time if time is None else time, dict(self.meta)
        )

    def norm(self) -> float:
        """L2 norm, quadrature by the trapezoid-equivalent Riemann sum."""
        return float(
            np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.volume_element())
        )

    def inner(self, other: "WaveField") -> complex:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return complex(
            np.sum(np.conj(self.values) * other.values) * self.grid.volume_element()
        )

    def boundary_ratio(self) -> float:
        """max|u| on the outermost sample layer over max|u| overall."""
        mags = np.abs(self.values)
        peak = mags.max()
        if peak == 0.0:
            return 0.0
        edge = 0.0
        for ax in range(self.grid.dimension):
            sl_lo = [slice(None)] * self.grid.dimension
            sl_hi = [slice(None)] * self.grid.dimension
            sl_lo[ax] = 0
            sl_hi[ax] = -1
            edge = max(edge, mags[tuple(sl_lo)].max(), mags[tuple(sl_hi)].max())
        return float(edge / peak)


def field_from_callable(fn, grid: GridSpec, time: float = 0.0) -> WaveField:
    """Sample fn(mesh_tuple) on the grid."""
    vals = np.asarray(fn(grid.mesh()), dtype=np.complex128)
    vals = np.broadcast_to(vals, grid.shape).copy()
    return WaveField(grid, vals, time)


def write_field(fld: WaveField, path) -> Path:
    """Write a field snapshot: binary amplitudes plus a JSON sidecar.

    Layout: a little-endian header (int64 dimension, int64 points per
    axis, float64 half width, float64 time) followed by row-major
    interleaved re/im float64 samples.  The sidecar repeats the header
    values plus norm and boundary diagnostics for humans.
    """
    path = Path(path)
    g = fld.grid
    buf = bytearray(
        _HEADER.pack(g.dimension, g.points_per_dim, g.half_width, fld.time)
    )
    inter = np.empty(fld.values.size * 2, dtype="<f8")
    inter[0::2] = fld.values.real.ravel(order="C")
    inter[1::2] = fld.values.imag.ravel(order="C")
    buf += inter.tobytes()
    path.write_bytes(bytes(buf))
    sidecar = path.with_suffix(".json") if path.suffix else Path(str(path) + ".json")
    sidecar.write_text(
        json.dumps(
            {
                "dimension": g.dimension,
                "points_per_dim": g.points_per_dim,
                "half_width": g.half_width,
                "time": fld.time,
                "l2_norm": fld.norm(),
                "boundary_ratio": fld.boundary_ratio(),
                "meta": {k: v for k, v in fld.meta.items() if _json_ok(v)},
            },
            indent=2,
        )
        + "\n"
    )
    return path


def read_field(path) -> WaveField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    dim, npts, half_width, time = _HEADER.unpack_from(raw)
    grid = GridSpec(int(dim), float(half_width), int(npts))
    count = int(npts) ** int(dim)
    expected = _HEADER.size + 16 * count
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    inter = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    vals = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
    return WaveField(grid, vals, float(time))


def _json_ok(v) -> bool:
    return isinstance(v, (str, int, float, bool)) or v is None
