"""1-D transform kernels h and their Mellin transforms.

Three kinds: the profit kernel max{0, p0 - t} (whose Mellin transform
p0^(s+1)/(s(s+1)) never vanishes on any vertical line in Re s > 0), the
exponential kernel e^{-t} (Mellin transform Gamma(s)), and tabulated kernels
on a 1-D log grid for everything else, e.g. kernels engineered to have a
Mellin zero on the working line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrabilityError
from .gammafn import complex_gamma
from .grids import LogGrid

__all__ = [
    "ProfitKernel",
    "ExponentialKernel",
    "SampledKernel",
    "KernelSpec",
    "kernel_eval",
    "kernel_mellin",
    "kernel_abs_mellin",
    "two_exponential_kernel",
]


@dataclass(frozen=True)
class ProfitKernel:
    p0: float

    def __post_init__(self):
        if not (self.p0 > 0.0):
            raise DomainError(f"profit kernel needs p0 > 0, got {self.p0}")


@dataclass(frozen=True)
class ExponentialKernel:
    pass


@dataclass(frozen=True)
class SampledKernel:
    """Kernel tabulated on a 1-D log grid; zero outside the sampled range."""

    grid: LogGrid
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        if self.grid.ndim != 1:
            raise DomainError("sampled kernels live on a 1-D log grid")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise DomainError("kernel values must match the grid shape")
        if not np.all(np.isfinite(vals)):
            raise IntegrabilityError("kernel values must be finite")
        object.__setattr__(self, "values", vals)


KernelSpec = (ProfitKernel, ExponentialKernel, SampledKernel)


def kernel_eval(h, t):
    """h(t) for scalar or array t > 0."""
    t = np.asarray(t, dtype=np.float64)
    if isinstance(h, ProfitKernel):
        return np.maximum(0.0, h.p0 - t)
    if isinstance(h, ExponentialKernel):
        return np.exp(-t)
    if isinstance(h, SampledKernel):
        v = np.log(t)
        y = h.grid.y_axis(0)
        out = np.interp(v, y, h.values, left=0.0, right=0.0)
        return out
    raise DomainError(f"unknown kernel kind {type(h).__name__}")


def kernel_mellin(h, s):
    """(Mh)(s) = ∫ t^(s-1) h(t) dt for Re s > 0; s scalar or complex array."""
    s = np.asarray(s, dtype=np.complex128)
    if np.any(s.real <= 0.0):
        raise DomainError("kernel Mellin transforms need Re s > 0")
    if isinstance(h, ProfitKernel):
        return h.p0 ** (s + 1.0) / (s * (s + 1.0))
    if isinstance(h, ExponentialKernel):
        return complex_gamma(s)
    if isinstance(h, SampledKernel):
        # rectangle rule in v = log t: ∫ e^{s v} h(e^v) dv
        y = h.grid.y_axis(0)
        dv = h.grid.dy[0]
        flat = s.reshape(-1)
        out = (np.exp(np.multiply.outer(flat, y)) @ h.values) * dv
        return out.reshape(s.shape) if s.shape else out[0]
    raise DomainError(f"unknown kernel kind {type(h).__name__}")


def kernel_abs_mellin(h, alpha: float) -> float:
    """The L^1 weight ∫ t^(alpha-1) |h(t)| dt used by the norm estimates."""
    if alpha <= 0.0:
        raise DomainError("alpha must be positive")
    if isinstance(h, ProfitKernel):
        return h.p0 ** (alpha + 1.0) / (alpha * (alpha + 1.0))
    if isinstance(h, ExponentialKernel):
        return float(complex_gamma(alpha).real)
    if isinstance(h, SampledKernel):
        y = h.grid.y_axis(0)
        return float(np.sum(np.exp(alpha * y) * np.abs(h.values)) * h.grid.dy[0])
    raise DomainError(f"unknown kernel kind {type(h).__name__}")


def two_exponential_kernel(n: int = 8192, t_lo: float = 1e-8, t_hi: float = 60.0) -> SampledKernel:
    """h(t) = e^{-t} - e * e^{-e t}, tabulated.

    Its Mellin transform Gamma(s)(1 - e^{1-s}) vanishes on the line Re s = 1
    (at s = 1 and at s = 1 + 2*pi*i*k), making it the canonical example of a
    kernel transform with a genuine null space.
    """
    grid = LogGrid.from_box(t_lo, t_hi, (n,))
    t = grid.x_axis(0)
    vals = np.exp(-t) - np.e * np.exp(-np.e * t)
    return SampledKernel(grid=grid, values=vals)
