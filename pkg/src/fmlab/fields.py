"""Uniform centered grids and sampled complex fields.

A :class:`Grid` is an origin-centered uniform lattice on the periodic box
``[-L, L)^n`` with a power-of-two number of points per axis.  Sample
coordinates along each axis are ``-L + j*h`` for ``j = 0 .. M-1`` with
``h = 2L/M``.  Under the scaled DFT used in :mod:`fmlab.transforms`, the
dual of a grid has box half-width ``1/(2h)`` and spacing ``1/(2L)`` (and
the same number of points), so space and frequency fields live on grids of
the same type.

A :class:`SampledField` holds one complex sample per grid point together
with a variable tag (``"space"`` or ``"frequency"``).  Fields are immutable
after construction; all operations elsewhere in the package return new
fields.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, UnsupportedDimensionError

TAG_SPACE = "space"
TAG_FREQUENCY = "frequency"

_TAG_CODES = {TAG_SPACE: 0, TAG_FREQUENCY: 1}
_CODE_TAGS = {v: k for k, v in _TAG_CODES.items()}

_MAGIC = b"FMF1"


def _check_dim(n: int) -> None:
    if n not in (1, 2):
        raise UnsupportedDimensionError(f"dimension must be 1 or 2, got {n}")


@dataclass(frozen=True)
class Grid:
    """Uniform centered lattice on ``[-L, L)^n``.

    Attributes:
        n: dimension (1 or 2).
        L: box half-width.
        points_per_axis: points per axis; a power of two, at least 8.
    """

    n: int
    L: float
    points_per_axis: int

    def __post_init__(self):
        _check_dim(self.n)
        m = self.points_per_axis
        if m < 8 or (m & (m - 1)) != 0:
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {m}")
        if not (self.L > 0):
            raise ValueError(f"box half-width must be positive, got {self.L}")

    @property
    def h(self) -> float:
        """Grid spacing ``2L / points_per_axis``."""
        return 2.0 * self.L / self.points_per_axis

    @property
    def size(self) -> int:
        """Total number of grid points."""
        return self.points_per_axis**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @property
    def cell_measure(self) -> float:
        """Volume ``h^n`` of one grid cell."""
        return self.h**self.n

    def axis_coords(self) -> np.ndarray:
        """Coordinates ``-L + j*h`` along one axis."""
        return -self.L + self.h * np.arange(self.points_per_axis)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of coordinates, one array of shape ``shape`` per axis."""
        ax = self.axis_coords()
        if self.n == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))

    def radii(self) -> np.ndarray:
        """Euclidean distance of every grid point from the origin."""
        if self.n == 1:
            return np.abs(self.axis_coords())
        x0, x1 = self.coords()
        return np.hypot(x0, x1)

    def dual(self) -> "Grid":
        """The frequency-side grid paired with this one by the scaled DFT."""
        return Grid(self.n, 1.0 / (2.0 * self.h), self.points_per_axis)

    def __str__(self) -> str:
        return f"Grid(n={self.n}, L={self.L:g}, M={self.points_per_axis}, h={self.h:g})"


@dataclass(frozen=True)
class SampledField:
    """Complex samples of a function on a :class:`Grid`.

    ``values`` has shape ``grid.shape`` and is stored read-only.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    tag: str

    def __post_init__(self):
        if self.tag not in _TAG_CODES:
            raise ValueError(f"tag must be 'space' or 'frequency', got {self.tag!r}")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("field values must be finite")
        vals = vals.copy() if vals.flags.writeable and vals is not self.values else vals
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn, tag: str) -> "SampledField":
        """Sample ``fn`` on the grid.

        ``fn`` receives one coordinate array per axis and must broadcast.
        """
        vals = np.asarray(fn(*grid.coords()), dtype=np.complex128)
        vals = np.broadcast_to(vals, grid.shape).copy()
        return cls(grid, vals, tag)

    def with_values(self, values: np.ndarray) -> "SampledField":
        return SampledField(self.grid, values, self.tag)

    def same_grid(self, other: "SampledField") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")


# ---------------------------------------------------------------------------
# Serialization: flat binary layout and CSV for small grids.
#
# Binary layout (little-endian): magic 'FMF1', uint32 n, float64 L,
# uint32 points_per_axis, uint8 tag code, then complex128 values in
# row-major order.
# ---------------------------------------------------------------------------

def field_to_bytes(fld: SampledField) -> bytes:
    head = _MAGIC + struct.pack(
        "<Id I B", fld.grid.n, fld.grid.L, fld.grid.points_per_axis, _TAG_CODES[fld.tag]
    )
    body = np.ascontiguousarray(fld.values, dtype="<c16").tobytes()
    return head + body


def field_from_bytes(data: bytes) -> SampledField:
    if data[:4] != _MAGIC:
        raise ValueError("not a field blob (bad magic)")
    n, L, m, tag_code = struct.unpack_from("<Id I B", data, 4)
    off = 4 + struct.calcsize("<Id I B")
    vals = np.frombuffer(data, dtype="<c16", offset=off, count=m**n).reshape((m,) * n)
    return SampledField(Grid(n, L, m), vals.astype(np.complex128), _CODE_TAGS[tag_code])


def save_field(fld: SampledField, path) -> None:
    with open(path, "wb") as f:
        f.write(field_to_bytes(fld))


def load_field(path) -> SampledField:
    with open(path, "rb") as f:
        return field_from_bytes(f.read())


def field_to_csv(fld: SampledField) -> str:
    """CSV dump (index coords, physical coords, re, im); for small grids only."""
    buf = io.StringIO()
    ax = fld.grid.axis_coords()
    if fld.grid.n == 1:
        buf.write("j,x,re,im\n")
        for j, v in enumerate(fld.values):
            buf.write(f"{j},{float(ax[j])!r},{float(v.real)!r},{float(v.imag)!r}\n")
    else:
        buf.write("j0,j1,x0,x1,re,im\n")
        for j0 in range(fld.grid.points_per_axis):
            for j1 in range(fld.grid.points_per_axis):
                v = fld.values[j0, j1]
                buf.write(f"{j0},{j1},{float(ax[j0])!r},{float(ax[j1])!r},"
                          f"{float(v.real)!r},{float(v.imag)!r}\n")
    return buf.getvalue()
