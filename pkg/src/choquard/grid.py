"""Uniform periodic grids on a truncated box, real fields, quadrature, file I/O.

The box is [-L, L)^d sampled at x_j = -L + j*h per axis (h = 2L/n), so the
origin is a grid point and the trapezoid/midpoint rule has equal weights
prod(h_i), spectrally accurate for smooth periodic integrands.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "GridMismatchError",
    "FieldFormatError",
    "l2_norm_sq",
    "inner",
    "write_field",
    "read_field",
]


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


class FieldFormatError(ValueError):
    """Malformed or truncated field file."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Per-axis point counts (powers of two, >= 8) and box half-width L > 0."""

    dims: tuple[int, ...]
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if len(self.dims) == 0:
            raise ValueError("grid needs at least one axis")
        for n in self.dims:
            if n < 8 or not _is_pow2(n):
                raise ValueError(f"axis size must be a power of two >= 8, got {n}")
        if not self.half_width > 0.0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * self.half_width / n for n in self.dims)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def axes(self) -> list[np.ndarray]:
        """Coordinate samples -L + j*h per axis."""
        L = self.half_width
        return [
            -L + h * np.arange(n) for n, h in zip(self.dims, self.spacing)
        ]

    @cached_property
    def radius_sq(self) -> np.ndarray:
        """|x|^2 on the full grid (shape = dims)."""
        out = np.zeros(self.dims)
        for axis, x in enumerate(self.axes()):
            shape = [1] * self.ndim
            shape[axis] = self.dims[axis]
            out = out + (x ** 2).reshape(shape)
        return out


@dataclass(frozen=True)
class Field:
    """Real samples on a GridSpec, C-ordered, finite everywhere."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != self.grid.dims:
            if v.size == self.grid.size:
                v = v.reshape(self.grid.dims)
            else:
                raise ValueError(
                    f"values of size {v.size} do not match grid {self.grid.dims}"
                )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field":
        mesh = np.meshgrid(*grid.axes(), indexing="ij")
        return cls(grid, np.asarray(fn(*mesh), dtype=np.float64))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.dims))


def _require_same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"grids differ: {f.grid} vs {g.grid}")


def l2_norm_sq(f: Field) -> float:
    """Quadrature L2 norm squared, sum f^2 * prod(h)."""
    return float(np.sum(f.values * f.values) * f.grid.cell_volume)


def inner(f: Field, g: Field) -> float:
    """Quadrature L2 pairing; fields must share a grid."""
    _require_same_grid(f, g)
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


_HEADER_KEYS = {"version", "dims", "half_width", "dtype", "order"}


def write_field(f: Field, path) -> None:
    """Write the FLD1 format: one-line JSON header, then raw little-endian f64."""
    header = {
        "version": 1,
        "dims": list(f.grid.dims),
        "half_width": f.grid.half_width,
        "dtype": "f64le",
        "order": "row-major",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        line = fh.readline()
        if not line.endswith(b"\n"):
            raise FieldFormatError("missing header line")
        try:
            header = json.loads(line.decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FieldFormatError(f"malformed header: {exc}") from exc
        if not isinstance(header, dict):
            raise FieldFormatError("header must be a JSON object")
        unknown = set(header) - _HEADER_KEYS
        if unknown:
            raise FieldFormatError(f"unknown header keys: {sorted(unknown)}")
        if header.get("version") != 1:
            raise FieldFormatError(f"unsupported version {header.get('version')!r}")
        if header.get("dtype") != "f64le":
            raise FieldFormatError(f"unsupported dtype {header.get('dtype')!r}")
        if header.get("order") != "row-major":
            raise FieldFormatError(f"unsupported order {header.get('order')!r}")
        try:
            grid = GridSpec(tuple(header["dims"]), float(header["half_width"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FieldFormatError(f"bad grid in header: {exc}") from exc
        payload = fh.read()
    expected = grid.size * 8
    if len(payload) < expected:
        raise FieldFormatError(
            f"truncated payload: {len(payload)} bytes, expected {expected}"
        )
    if len(payload) > expected:
        raise FieldFormatError(
            f"trailing bytes: {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.dims)
    return Field(grid, values.copy())
