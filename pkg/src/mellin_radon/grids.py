"""Log-uniform grids, sampled functions, and Mellin-plane slices.

All sampling lives in logarithmic coordinates y = log x: a LogGrid is uniform
in y with power-of-two sample counts so the discrete Mellin pipeline is an
exact FFT pair. The frequency grid dual to axis i has spacing
2*pi/(N_i*dy_i) and is stored in ascending order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, DomainError, GridMismatchError

__all__ = ["LogGrid", "GridFunction", "MellinSlice"]


def _as_tuple(v, n=None, kind=float):
    if np.isscalar(v):
        v = (v,) if n is None else (v,) * n
    out = tuple(kind(t) for t in v)
    return out


@dataclass(frozen=True)
class LogGrid:
    """Uniform grid in y = log x: samples y0_i + k*dy_i, k = 0..N_i-1."""

    y0: tuple
    dy: tuple
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "y0", _as_tuple(self.y0))
        object.__setattr__(self, "dy", _as_tuple(self.dy))
        object.__setattr__(self, "shape", _as_tuple(self.shape, kind=int))
        if not (len(self.y0) == len(self.dy) == len(self.shape)):
            raise DimensionMismatchError("y0, dy, shape must have equal length")
        for d in self.dy:
            if d <= 0.0:
                raise DomainError("dy must be positive")
        for N in self.shape:
            if N < 8 or (N & (N - 1)) != 0:
                raise DomainError(f"sample counts must be powers of two >= 8, got {N}")

    @classmethod
    def from_box(cls, x_lo, x_hi, shape) -> "LogGrid":
        """Grid whose first/last samples sit at x_lo/x_hi (per axis)."""
        shape = _as_tuple(shape, kind=int)
        x_lo = _as_tuple(x_lo, len(shape))
        x_hi = _as_tuple(x_hi, len(shape))
        y0 = tuple(np.log(a) for a in x_lo)
        dy = tuple(
            (np.log(b) - np.log(a)) / (N - 1) for a, b, N in zip(x_lo, x_hi, shape)
        )
        return cls(y0=y0, dy=dy, shape=shape)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def y_axis(self, i: int) -> np.ndarray:
        return self.y0[i] + self.dy[i] * np.arange(self.shape[i])

    def y_axes(self) -> list:
        return [self.y_axis(i) for i in range(self.ndim)]

    def x_axis(self, i: int) -> np.ndarray:
        return np.exp(self.y_axis(i))

    def x_axes(self) -> list:
        return [self.x_axis(i) for i in range(self.ndim)]

    def freq_axis(self, i: int) -> np.ndarray:
        """Dual Mellin frequencies for axis i, fftshifted to ascending order."""
        N, d = self.shape[i], self.dy[i]
        return 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(N, d=d))

    def freq_axes(self) -> list:
        return [self.freq_axis(i) for i in range(self.ndim)]

    def dual_compatible(self, other: "LogGrid", tol: float = 1e-12) -> bool:
        """Same sample counts and spacings (origins are free to differ)."""
        return self.shape == other.shape and all(
            abs(a - b) <= tol * max(1.0, abs(a)) for a, b in zip(self.dy, other.dy)
        )

    def shifted(self, y0) -> "LogGrid":
        return LogGrid(y0=_as_tuple(y0, self.ndim), dy=self.dy, shape=self.shape)


@dataclass(frozen=True)
class GridFunction:
    """Real samples over a LogGrid (row-major, axis order matching the grid)."""

    grid: LogGrid
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise DimensionMismatchError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: LogGrid, fn) -> "GridFunction":
        """Sample fn(x) on the grid; fn takes an array of shape (..., n)."""
        mesh = np.meshgrid(*grid.x_axes(), indexing="ij", sparse=False)
        pts = np.stack(mesh, axis=-1)
        return cls(grid=grid, values=np.asarray(fn(pts), dtype=np.float64))

    def total_mass(self) -> float:
        """∫ f dx by the log-rectangle rule."""
        w = 1.0
        vals = self.values
        for i in range(self.grid.ndim):
            shape = [1] * self.grid.ndim
            shape[i] = self.grid.shape[i]
            w = w * np.exp(self.grid.y_axis(i)).reshape(shape) * self.grid.dy[i]
        return float(np.sum(vals * w))

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# dim {self.grid.ndim}\n")
            for i in range(self.grid.ndim):
                fh.write(
                    f"# axis {i + 1}: {self.grid.y0[i]!r} {self.grid.dy[i]!r} {self.grid.shape[i]}\n"
                )
            for v in self.values.ravel(order="C"):
                fh.write(f"{v!r}\n")

    @classmethod
    def read_csv(cls, path) -> "GridFunction":
        y0, dy, shape = [], [], []
        vals = []
        ndim = None
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if body.startswith("dim"):
                        ndim = int(body.split()[1])
                    elif body.startswith("axis"):
                        _, rest = body.split(":", 1)
                        a, d, N = rest.split()
                        y0.append(float(a))
                        dy.append(float(d))
                        shape.append(int(N))
                    continue
                vals.append(float(line))
        if ndim is None or len(shape) != ndim:
            raise GridMismatchError(f"malformed GridFunction header in {path}")
        grid = LogGrid(y0=tuple(y0), dy=tuple(dy), shape=tuple(shape))
        arr = np.asarray(vals, dtype=np.float64).reshape(grid.shape, order="C")
        return cls(grid=grid, values=arr)


@dataclass(frozen=True)
class MellinSlice:
    """Complex samples of a Mellin transform on the plane Re z = c.

    Values are indexed over the ascending (fftshifted) dual frequency lattice
    of `grid`; the stored numbers follow the plain continuum convention
    (Mf)(c + i*xi) with no hidden 2*pi factors. `meta` records provenance
    (taper fraction, sign flips) and never affects equality.
    """

    c: tuple
    grid: LogGrid
    values: np.ndarray = field(compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c", _as_tuple(self.c, self.grid.ndim))
        if len(self.c) != self.grid.ndim:
            raise DimensionMismatchError("c must have one component per axis")
        for ci in self.c:
            if ci <= 0.0:
                raise DomainError(f"slice plane must have positive components, got c={self.c}")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise DimensionMismatchError(
                f"values shape {vals.shape} does not match dual grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    def freq_axes(self) -> list:
        return self.grid.freq_axes()

    def z_lattice(self) -> np.ndarray:
        """Complex points c + i*xi of shape grid.shape + (n,)."""
        mesh = np.meshgrid(*self.freq_axes(), indexing="ij")
        return np.stack(
            [ci + 1j * m for ci, m in zip(self.c, mesh)], axis=-1
        )

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# c = {' '.join(repr(ci) for ci in self.c)}\n")
            for i in range(self.grid.ndim):
                fh.write(
                    f"# axis {i + 1}: {self.grid.y0[i]!r} {self.grid.dy[i]!r} {self.grid.shape[i]}\n"
                )
            mesh = np.meshgrid(*self.freq_axes(), indexing="ij")
            flat = [m.ravel(order="C") for m in mesh]
            vals = self.values.ravel(order="C")
            for row in range(vals.size):
                xi = ",".join(repr(m[row]) for m in flat)
                fh.write(f"{xi},{vals[row].real!r},{vals[row].imag!r}\n")

    @classmethod
    def read_csv(cls, path) -> "MellinSlice":
        c = None
        y0, dy, shape = [], [], []
        re, im = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if body.startswith("c ="):
                        c = tuple(float(t) for t in body[3:].split())
                    elif body.startswith("axis"):
                        _, rest = body.split(":", 1)
                        a, d, N = rest.split()
                        y0.append(float(a))
                        dy.append(float(d))
                        shape.append(int(N))
                    continue
                parts = line.split(",")
                re.append(float(parts[-2]))
                im.append(float(parts[-1]))
        if c is None or not shape:
            raise GridMismatchError(f"malformed MellinSlice header in {path}")
        grid = LogGrid(y0=tuple(y0), dy=tuple(dy), shape=tuple(shape))
        vals = (np.asarray(re) + 1j * np.asarray(im)).reshape(grid.shape, order="C")
        return cls(c=c, grid=grid, values=vals)
