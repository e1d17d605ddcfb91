"""Recovery of the capacity density from transform samples.

Every forward operator in this package acts as multiplication in the Mellin
domain: on the plane Re z = c the transform of the data equals the transform
of f at the mirrored argument I - z times an explicit symbol. Inversion is
therefore spectral division on the frequency lattice of the data grid:

    radon   symbol (Me^{-q})(z),           prefactor Gamma(s)
    profit  symbol (Me^{-q})(z),           prefactor Gamma(s+2) p0^{-(s+1)}
    kernel  symbol (Me^{-q})(z) (Mh)(s),   prefactor Gamma(s)

with s = z_1 + ... + z_n. Division uses the Tikhonov filter
conj(K)/(|K|^2 + epsilon^2), a smooth spectral cut that degrades to exact
division as epsilon -> 0. The kernel factor (Mh)(s) is divided separately
with epsilon scaled to its local magnitude along the line (see
deconvolve_kernel); near-vanishing bands of (Mh) are flagged and excluded. The mirrored argument means the recovered slice
lives on the plane I - c with the frequency sign flipped; the flip is an
index reversal on the shifted lattice and is recorded in the metadata, so a
forward Mellin transform of the estimate reproduces the slice as stored.

The working plane defaults to c = I/2, where the data plane and the mirror
plane coincide and the weighted L^2 norms on both sides are the plain L^2
norm. Any c inside the open unit cell works when the data and the density
decay accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost import CostExpr
from .errors import (
    DimensionMismatchError,
    DivisionInstabilityError,
    DomainError,
    GridMismatchError,
    ValidationError,
)
from .gammafn import complex_gamma
from .grids import GridFunction, LogGrid, MellinSlice
from .kernels import kernel_mellin
from .mellin import (
    TAPER_FRACTION,
    mellin_exp_cost,
    mellin_forward,
    mellin_inverse_complex,
    negate_frequencies,
)

__all__ = [
    "InversionOptions",
    "InversionReport",
    "deconvolve_radon",
    "deconvolve_profit",
    "deconvolve_kernel",
    "invert_radon",
    "invert_profit",
    "invert_kernel",
    "interior_l2_error",
]

# |Mh| below this multiple of its local scale on the s-line marks a
# null-space band that the regularized division cannot see into
KERNEL_BAND_RATIO = 1e-3


@dataclass(frozen=True)
class InversionOptions:
    """Spectral-division knobs.

    c: working plane for the data transform; None means I/2. The recovered
    slice lives on I - c, so every component must stay inside (0, 1).
    epsilon: Tikhonov parameter; 0 requests exact division.
    taper: apply the standard cosine window to the data before transforming
    (useful when the data does not decay inside its box).
    cutoff: when set, frequencies outside this Euclidean radius are zeroed
    after division.
    """

    c: tuple | None = None
    epsilon: float = 1e-8
    taper: bool = False
    cutoff: float | None = None

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.cutoff is not None and self.cutoff <= 0.0:
            raise DomainError(f"cutoff must be positive, got {self.cutoff}")
        if self.c is not None:
            c = tuple(float(ci) for ci in np.atleast_1d(self.c))
            if any(ci <= 0.0 for ci in c):
                raise DomainError(f"plane components must be positive, got {c}")
            object.__setattr__(self, "c", c)

    def plane(self, ndim: int) -> tuple:
        if self.c is None:
            return (0.5,) * ndim
        if len(self.c) == 1 and ndim > 1:
            return self.c * ndim
        if len(self.c) != ndim:
            raise DimensionMismatchError(
                f"plane has {len(self.c)} components for {ndim} axes")
        return self.c


@dataclass
class InversionReport:
    """Bookkeeping from one inversion run."""

    c: tuple
    epsilon: float
    min_symbol: float
    imaginary_residue: float
    flagged_zero_bands: list = field(default_factory=list)
    interior_l2_error: float | None = None

    def to_dict(self):
        return {
            "c": list(self.c),
            "epsilon": self.epsilon,
            "min_symbol": self.min_symbol,
            "imaginary_residue": self.imaginary_residue,
            "flagged_zero_bands": [list(b) for b in self.flagged_zero_bands],
            "interior_l2_error": self.interior_l2_error,
        }


def _mirror_plane(c) -> tuple:
    w = tuple(1.0 - ci for ci in c)
    if any(wi <= 0.0 for wi in w):
        raise DomainError(
            f"the recovered slice lives on I - c, which needs every c_i "
            f"inside (0, 1); got c={tuple(c)}")
    return w


def _divide(slice_: MellinSlice, numer: np.ndarray, symbol: np.ndarray,
            opts: InversionOptions, meta: dict) -> MellinSlice:
    """Tikhonov division and the w = I - z re-indexing, shared by all three
    deconvolvers."""
    mirror = _mirror_plane(slice_.c)
    abs2 = symbol.real ** 2 + symbol.imag ** 2
    if opts.epsilon == 0.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = numer * np.conj(symbol) / abs2
        bad = ~np.isfinite(vals)
        if np.any(bad):
            idx = tuple(np.argwhere(bad)[0])
            xi = tuple(float(ax[i])
                       for ax, i in zip(slice_.freq_axes(), idx))
            raise DivisionInstabilityError(
                f"symbol magnitude {np.sqrt(abs2[idx]):.3e} at frequency "
                f"xi={xi} is at the machine floor; exact division (epsilon=0) "
                "cannot proceed")
    else:
        vals = numer * np.conj(symbol) / (abs2 + opts.epsilon ** 2)
    if opts.cutoff is not None:
        mesh = np.meshgrid(*slice_.freq_axes(), indexing="ij")
        radius2 = sum(m * m for m in mesh)
        vals = np.where(radius2 <= opts.cutoff ** 2, vals, 0.0)
    meta = dict(meta)
    meta.update({
        "frequency_sign": "flipped",
        "epsilon": float(opts.epsilon),
        "cutoff": opts.cutoff,
        "min_symbol": float(np.sqrt(abs2.min())),
    })
    return MellinSlice(c=mirror, grid=slice_.grid,
                       values=negate_frequencies(vals), meta=meta)


def deconvolve_radon(g_slice: MellinSlice, q: CostExpr,
                     opts: InversionOptions | None = None) -> MellinSlice:
    """Slice of Mf on the plane I - c from a slice of the Radon transform on
    the plane c: (Mf)(I-z) = Gamma(s) (MR_q f)(z) / (Me^{-q})(z)."""
    opts = opts or InversionOptions()
    z = g_slice.z_lattice()
    s = z.sum(axis=-1)
    numer = complex_gamma(s) * g_slice.values
    symbol = mellin_exp_cost(q, z)
    return _divide(g_slice, numer, symbol, opts, {"source": "radon"})


def deconvolve_profit(pi_slice: MellinSlice, q: CostExpr, p0: float = 1.0,
                      opts: InversionOptions | None = None) -> MellinSlice:
    """Profit analogue: (Mf)(I-z) = Gamma(s+2) p0^{-(s+1)}
    (M Pi_q f)(z) / (Me^{-q})(z), with Pi at fixed output price p0."""
    if p0 <= 0:
        raise ValidationError(f"p0 must be positive, got {p0}")
    opts = opts or InversionOptions()
    z = pi_slice.z_lattice()
    s = z.sum(axis=-1)
    numer = (complex_gamma(s + 2.0) * np.exp(-(s + 1.0) * np.log(p0))
             * pi_slice.values)
    symbol = mellin_exp_cost(q, z)
    return _divide(pi_slice, numer, symbol, opts,
                   {"source": "profit", "p0": float(p0)})


def _kernel_on_line(h, s_flat: np.ndarray) -> np.ndarray:
    """(Mh) over a flat array of s values, evaluated once per distinct s.

    Sweep lattices repeat s = alpha + i(xi_1 + ... + xi_n) heavily along
    antidiagonals, and sampled kernels pay one quadrature per distinct s."""
    su, inverse = np.unique(s_flat, return_inverse=True)
    out = np.empty(su.shape, dtype=np.complex128)
    step = 2048
    for k in range(0, su.size, step):
        out[k:k + step] = kernel_mellin(h, su[k:k + step])
    return out[inverse]


def _local_scale(magnitude: np.ndarray, window: int = 8) -> np.ndarray:
    """Running maximum over +-window lattice steps. A local scale keeps the
    exponential decay of Gamma-type kernels along the line from reading as a
    null space; only genuine dips count against it."""
    n = magnitude.size
    local = np.empty(n)
    for k in range(n):
        local[k] = magnitude[max(0, k - window):k + window + 1].max()
    return local


def _zero_bands(tau: np.ndarray, below: np.ndarray):
    """Contiguous runs of below-threshold points as (tau_lo, tau_hi) pairs."""
    if not np.any(below):
        return []
    edges = np.flatnonzero(np.diff(below.astype(int)))
    starts = [0] if below[0] else []
    starts += list(edges[~below[edges]] + 1)
    stops = list(edges[below[edges]])
    stops += [tau.size - 1] if below[-1] else []
    return [(float(tau[a]), float(tau[b])) for a, b in zip(starts, stops)]


def deconvolve_kernel(gh_slice: MellinSlice, q: CostExpr, h,
                      opts: InversionOptions | None = None) -> MellinSlice:
    """Kernel-transform analogue: divides additionally by (Mh)(s) on the
    line Re s = c_1 + ... + c_n.

    The kernel factor is divided with epsilon measured against the local
    magnitude scale of (Mh) along that line, not in absolute terms: (Mh)
    typically decays like a Gamma function, so an absolute epsilon that is
    harmless for the cost symbol would wipe out the kernel factor at moderate
    frequencies. Where |Mh| dips below KERNEL_BAND_RATIO times the local
    scale the transform has a numerical null space: those s-bands are listed
    in the metadata under "flagged_zero_bands" and the returned slice is
    zero inside them rather than an amplified-noise estimate. The cost
    symbol then carries the absolute epsilon exactly as in the radon path.
    """
    opts = opts or InversionOptions()
    z = gh_slice.z_lattice()
    s = z.sum(axis=-1)

    # Frequency sums repeat along antidiagonals up to float jitter; snap to
    # the merged line so the local-scale window spans real tau distance.
    alpha = float(s.real.flat[0])
    tau = np.unique(np.round(s.imag.ravel(), 9))
    line = _kernel_on_line(h, alpha + 1j * tau)
    mag = np.abs(line)
    scale = _local_scale(mag)
    below = mag <= KERNEL_BAND_RATIO * scale
    bands = _zero_bands(tau, below)

    which = np.clip(np.searchsorted(tau, s.imag), 1, tau.size - 1)
    which -= (s.imag - tau[which - 1] < tau[which] - s.imag).astype(int)
    mh = line[which]
    eps_h = opts.epsilon * scale[which]
    with np.errstate(divide="ignore", invalid="ignore"):
        filt = np.conj(mh) / (mh.real ** 2 + mh.imag ** 2 + eps_h ** 2)
        numer = np.where(below[which], 0.0,
                         complex_gamma(s) * gh_slice.values * filt)
    symbol = mellin_exp_cost(q, z)
    return _divide(gh_slice, numer, symbol, opts,
                   {"source": "kernel", "flagged_zero_bands": bands})


def _finish(out_slice: MellinSlice, target: LogGrid,
            plane: tuple) -> tuple:
    est = mellin_inverse_complex(out_slice, target)
    peak = float(np.abs(est.real).max())
    residue = float(np.abs(est.imag).max()) / peak if peak > 0.0 else 0.0
    report = InversionReport(
        c=plane,
        epsilon=out_slice.meta["epsilon"],
        min_symbol=out_slice.meta["min_symbol"],
        imaginary_residue=residue,
        flagged_zero_bands=list(out_slice.meta.get("flagged_zero_bands", [])),
    )
    return GridFunction(grid=target, values=est.real), report


def invert_radon(g: GridFunction, q: CostExpr,
                 opts: InversionOptions | None = None,
                 out_grid: LogGrid | None = None):
    """Estimate f from Radon-transform samples over a log price grid.

    Pipeline: Mellin transform of the data on the plane c, spectral division,
    inverse transform on the mirror plane. The estimate lives on out_grid
    (defaults to the data grid, which is the right choice only when f was
    boxed the same way); out_grid must share sample counts and spacings with
    the data grid. Returns the estimate and an InversionReport.
    """
    opts = opts or InversionOptions()
    plane = opts.plane(g.grid.ndim)
    sl = mellin_forward(g, plane, taper=TAPER_FRACTION if opts.taper else 0.0)
    out = deconvolve_radon(sl, q, opts)
    return _finish(out, out_grid or g.grid, plane)


def invert_profit(pi: GridFunction, p0: float, q: CostExpr,
                  opts: InversionOptions | None = None,
                  out_grid: LogGrid | None = None):
    """Estimate f from profit samples at fixed output price p0. No numerical
    differentiation in p0 is involved; the p0 dependence is carried entirely
    by the Gamma(s+2) p0^{-(s+1)} prefactor."""
    opts = opts or InversionOptions()
    plane = opts.plane(pi.grid.ndim)
    sl = mellin_forward(pi, plane, taper=TAPER_FRACTION if opts.taper else 0.0)
    out = deconvolve_profit(sl, q, p0, opts)
    return _finish(out, out_grid or pi.grid, plane)


def invert_kernel(gh: GridFunction, q: CostExpr, h,
                  opts: InversionOptions | None = None,
                  out_grid: LogGrid | None = None):
    """Estimate f from kernel-transform samples. Frequency bands where (Mh)
    nearly vanishes on the working line are reported, not inverted."""
    opts = opts or InversionOptions()
    plane = opts.plane(gh.grid.ndim)
    sl = mellin_forward(gh, plane, taper=TAPER_FRACTION if opts.taper else 0.0)
    out = deconvolve_kernel(sl, q, h, opts)
    return _finish(out, out_grid or gh.grid, plane)


def interior_l2_error(estimate: GridFunction, truth: GridFunction,
                      fraction: float = 0.6) -> float:
    """Relative L^2(dx) distance over the centered sub-box spanning the
    given fraction of the log range per axis."""
    if not (0.0 < fraction <= 1.0):
        raise DomainError(f"fraction must be in (0, 1], got {fraction}")
    if estimate.grid != truth.grid:
        raise GridMismatchError(
            "estimate and truth must live on the same grid")
    grid = truth.grid
    sel = []
    for N in grid.shape:
        margin = int(round(0.5 * (1.0 - fraction) * (N - 1)))
        sel.append(slice(margin, N - margin))
    sel = tuple(sel)
    weight = np.ones(())
    for i in range(grid.ndim):
        sh = [1] * grid.ndim
        sh[i] = grid.shape[i]
        weight = weight * np.exp(grid.y_axis(i)).reshape(sh)
    diff2 = ((estimate.values - truth.values) ** 2 * weight)[sel].sum()
    ref2 = (truth.values ** 2 * weight)[sel].sum()
    if ref2 == 0.0:
        return 0.0 if diff2 == 0.0 else float("inf")
    return float(np.sqrt(diff2 / ref2))
