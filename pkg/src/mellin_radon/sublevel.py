"""Sublevel mass accumulation on log grids.

The forward operators all reduce to the same primitive: given a density and a
cost field sampled on a log grid, how much mass sits below each of a batch of
cost thresholds. Cells are modelled by the bilinear interpolant of their
corner costs, collapsed to the separable linear model

    g(u, v) = mean + B (u - 1/2) + C (v - 1/2)

whose sublevel fraction has a closed piecewise form. Cells entirely below a
threshold are resolved by a prefix sum over max-cost order; cells straddling
it go through the straddle kernel (compiled when the extension built,
otherwise the numpy fallback in _core_py).

Three dimensions use the analogous trilinear-to-linear collapse and the exact
cube-cut volume polynomial, evaluated directly without the sorted sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .grids import GridFunction, LogGrid

try:
    from . import _core as _compiled
except ImportError:
    _compiled = None

from . import _core_py as _fallback

_PROFILE_BINS = 512


def available_backends():
    """Names of the straddle-kernel implementations importable right now."""
    names = []
    if _compiled is not None:
        names.append("compiled")
    names.append("python")
    return tuple(names)


def _impl(backend):
    if backend == "auto":
        return _compiled if _compiled is not None else _fallback
    if backend == "compiled":
        if _compiled is None:
            raise ValidationError(
                "compiled backend requested but the extension is not built")
        return _compiled
    if backend == "python":
        return _fallback
    raise ValidationError(f"unknown backend {backend!r}")


def corner_mean(values: np.ndarray) -> np.ndarray:
    """Average of the 2^n corner values of each cell."""
    out = values
    for axis in range(values.ndim):
        lo = [slice(None)] * values.ndim
        hi = [slice(None)] * values.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        out = 0.5 * (out[tuple(lo)] + out[tuple(hi)])
    return out


def _axis_cell_integrals(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Per-cell integrals along one axis: trapezoid plus the endpoint
    derivative correction h^2/12 (f'_i - f'_{i+1}), with slopes from central
    differences (one-sided at the ends). Corrections telescope, so the axis
    total matches the trapezoid sum up to the boundary slopes, which vanish
    for decaying integrands."""
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    base = 0.5 * h * (v[:-1] + v[1:])
    if n >= 3:
        d = np.empty_like(v)
        d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        base = base - (h * h / 12.0) * (d[1:] - d[:-1])
    return np.moveaxis(base, 0, axis)


def _weighted_corners(f: GridFunction) -> np.ndarray:
    weighted = f.values
    for axis, (y0, dy, n) in enumerate(zip(f.grid.y0, f.grid.dy, f.grid.shape)):
        shape = [1] * f.grid.ndim
        shape[axis] = n
        weighted = weighted * np.exp(y0 + np.arange(n) * dy).reshape(shape)
    return weighted


def cell_masses(f: GridFunction) -> np.ndarray:
    """Per-cell integral of f dx: corrected tensor trapezoid of f against
    the log-volume weight e^{sum y}. The per-cell endpoint correction is
    fourth order; it redistributes mass between neighbouring cells and
    leaves the grid total at the telescoping trapezoid value, so the total
    is set by tail truncation rather than by the grid step. Fast per-cell
    variation at the box edge can push a corrected cell slightly negative,
    which the clamp absorbs at the cost of mass that is negligible there by
    construction."""
    masses = _weighted_corners(f)
    for axis, dy in enumerate(f.grid.dy):
        masses = _axis_cell_integrals(masses, dy, axis)
    return np.maximum(masses, 0.0)


def _fine_weighted(weighted: np.ndarray, refine: int) -> np.ndarray:
    """Weighted corner field interpolated onto the refine-times-finer corner
    lattice, geometrically per axis where both endpoints are positive and
    linearly otherwise."""
    fine = weighted
    for axis in range(weighted.ndim):
        n = fine.shape[axis]
        j = np.arange(refine * (n - 1) + 1)
        base = np.minimum(j // refine, n - 2)
        frac = (j - base * refine) / refine
        lo = np.take(fine, base, axis=axis)
        hi = np.take(fine, base + 1, axis=axis)
        shape = [1] * weighted.ndim
        shape[axis] = j.size
        frac = frac.reshape(shape)
        lin = lo * (1.0 - frac) + hi * frac
        pos = (lo > 0.0) & (hi > 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            geo = np.exp((1.0 - frac) * np.log(np.where(pos, lo, 1.0))
                         + frac * np.log(np.where(pos, hi, 1.0)))
        fine = np.where(pos, geo, lin)
    return fine


def refined_tilt_slopes(f: GridFunction, refine: int):
    """Per-subcell log increments of the weighted density along each axis,
    on the same tiling as refined_cell_masses. Zero where any corner of the
    subcell is nonpositive (the linear-fallback cells in far tails)."""
    fine = _fine_weighted(_weighted_corners(f), refine)
    logw = np.log(np.where(fine > 0.0, fine, 1.0))
    ok = ((fine[:-1, :-1] > 0.0) & (fine[1:, :-1] > 0.0)
          & (fine[:-1, 1:] > 0.0) & (fine[1:, 1:] > 0.0))
    a1 = 0.5 * ((logw[1:, :-1] - logw[:-1, :-1])
                + (logw[1:, 1:] - logw[:-1, 1:]))
    a2 = 0.5 * ((logw[:-1, 1:] - logw[:-1, :-1])
                + (logw[1:, 1:] - logw[1:, :-1]))
    zero = np.zeros_like(a1)
    return np.where(ok, a1, zero), np.where(ok, a2, zero)


def _tilt_offset(a: np.ndarray) -> np.ndarray:
    """Centroid offset from the midpoint for the exponential weight e^{au}
    on the unit interval: e^a/(e^a - 1) - 1/a - 1/2. Odd in a, bounded by
    1/2, about a/12 for small a."""
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    tiny = np.abs(a) < 1e-4
    big = np.abs(a) > 30.0
    mid = ~tiny & ~big
    out[tiny] = a[tiny] / 12.0
    am = a[mid]
    out[mid] = 1.0 / (-np.expm1(-am)) - 1.0 / am - 0.5
    ab = a[big]
    out[big] = np.sign(ab) * 0.5 - 1.0 / ab
    return out


def subcell_mean_shift(corner: np.ndarray, a1: np.ndarray,
                       a2: np.ndarray) -> np.ndarray:
    """Cost shift moving each cell's model kernel from the uniform-mass mean
    to the tilted-mass mean, given the signed cost variations of the corner
    field and the per-cell log-mass increments. Correcting the first moment
    this way removes the leading within-cell bias of density estimates."""
    c00 = corner[:-1, :-1]
    c10 = corner[1:, :-1]
    c01 = corner[:-1, 1:]
    c11 = corner[1:, 1:]
    bs = 0.5 * ((c10 - c00) + (c11 - c01))
    cs = 0.5 * ((c01 - c00) + (c11 - c10))
    return bs * _tilt_offset(a1) + cs * _tilt_offset(a2)


def center_mean_shift(centers: np.ndarray, a1: np.ndarray,
                      a2: np.ndarray) -> np.ndarray:
    """Centers-field analogue of subcell_mean_shift: the cost offset of each
    subcell's tilted-mass centroid from its center sample, with the signed
    cost variations taken from centred differences of the field itself."""
    b = np.gradient(centers, axis=0)
    c = np.gradient(centers, axis=1)
    return b * _tilt_offset(a1) + c * _tilt_offset(a2)


def refined_cell_masses(f: GridFunction, refine: int) -> np.ndarray:
    """Subcell masses on the refine-times-finer tiling.

    The weighted corner field is interpolated geometrically per axis (log
    weights vary linearly for exponential-times-power densities, so this is
    the profile that matches the data; cells with a nonpositive corner fall
    back to linear). Each coarse cell's subcell masses are then rescaled to
    sum exactly to its corrected cell mass, so refinement redistributes
    mass within cells and never changes totals."""
    weighted = _weighted_corners(f)
    coarse = cell_masses(f)
    if refine <= 1:
        return coarse
    fine = _fine_weighted(weighted, refine)
    m = corner_mean(fine) * np.prod(f.grid.dy) / float(refine ** f.grid.ndim)
    blocks = []
    for n in coarse.shape:
        blocks.extend([n, refine])
    mb = m.reshape(blocks)
    sums = mb.sum(axis=tuple(range(1, len(blocks), 2)))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(sums != 0.0, coarse / np.where(sums != 0.0, sums, 1.0),
                         1.0)
    mb = mb * scale.reshape([v for n in coarse.shape for v in (n, 1)])
    return mb.reshape(m.shape)


def refined_corner_costs(q, grid: LogGrid, scale, refine: int,
                         centers=False) -> np.ndarray:
    """Cost field on the refine-times-finer corner lattice of the grid's
    cells (or on the subcell centers), with coordinates scaled
    componentwise by `scale`."""
    axes = []
    off = 0.5 if centers else 0.0
    for y0, dy, n, s in zip(grid.y0, grid.dy, grid.shape, scale):
        count = refine * (n - 1) + (0 if centers else 1)
        step = dy / refine
        axes.append(float(s) * np.exp(y0 + (np.arange(count) + off) * step))
    return _eval_on_axes(q, axes)


def _eval_on_axes(q, axes):
    from .cost import CostExpr, eval_cost_axes

    n = len(axes)
    if isinstance(q, CostExpr):
        broadcast = []
        for i, ax in enumerate(axes):
            shape = [1] * n
            shape[i] = ax.size
            broadcast.append(ax.reshape(shape))
        return eval_cost_axes(q, broadcast)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.asarray(q(np.stack(mesh, axis=-1)), dtype=np.float64)


def subcell_geometry(corner: np.ndarray):
    """Linear-model coefficients (g1, b, c) per cell of a 2-D corner field.
    g1 is the model minimum, b and c the absolute edge variations."""
    if corner.ndim != 2:
        raise DimensionMismatchError(
            f"expected a 2-D corner field, got {corner.ndim}-D")
    c00 = corner[:-1, :-1]
    c10 = corner[1:, :-1]
    c01 = corner[:-1, 1:]
    c11 = corner[1:, 1:]
    b = np.abs(0.5 * ((c10 - c00) + (c11 - c01)))
    c = np.abs(0.5 * ((c01 - c00) + (c11 - c10)))
    mean = 0.25 * (c00 + c10 + c01 + c11)
    g1 = mean - 0.5 * (b + c)
    return g1, b, c


@dataclass
class SublevelField:
    """Per-direction sorted geometry, ready for threshold sweeps."""

    g1: np.ndarray
    b: np.ndarray
    c: np.ndarray
    w: np.ndarray
    total_mass: float = 0.0
    cost_min: float = 0.0
    cost_max: float = 0.0

    @classmethod
    def from_geometry(cls, g1, b, c, w):
        g1 = np.ascontiguousarray(g1, dtype=np.float64).ravel()
        b = np.ascontiguousarray(b, dtype=np.float64).ravel()
        c = np.ascontiguousarray(c, dtype=np.float64).ravel()
        w = np.ascontiguousarray(w, dtype=np.float64).ravel()
        order = np.argsort(g1, kind="stable")
        g1 = np.ascontiguousarray(g1[order])
        b = np.ascontiguousarray(b[order])
        c = np.ascontiguousarray(c[order])
        w = np.ascontiguousarray(w[order])
        return cls(
            g1=g1, b=b, c=c, w=w,
            total_mass=float(w.sum()),
            cost_min=float(g1[0]) if g1.size else 0.0,
            cost_max=float((g1 + b + c).max()) if g1.size else 0.0,
        )

    @classmethod
    def from_corners(cls, corner, cell_weights, mean_shift=None):
        g1, b, c = subcell_geometry(corner)
        if mean_shift is not None:
            g1 = g1 + mean_shift
        return cls.from_geometry(g1, b, c, cell_weights)

    @cached_property
    def _full_sweep(self):
        # Sorted retirement levels with a mass prefix, built on first
        # masses() call only; density() never needs it.
        gmax = self.g1 + self.b + self.c
        gorder = np.argsort(gmax, kind="stable")
        return gmax[gorder], np.concatenate(([0.0], np.cumsum(self.w[gorder])))

    def level_density(self, thresholds, logstep, backend="auto"):
        """Density estimate for level-set transforms.

        density() is exact for the cell model but jagged where the level
        set runs along a grid direction: there the straddling cells tile
        cost space without overlap and the model density is a staircase
        with one step per cost-ladder rung. Averaging the exact model mass
        over a window of one rung (logstep wide in log cost) interpolates
        the staircase; the two-rung window Richardson-combines away the
        window's own curvature bias. No free step parameter: logstep is the
        grid's own ladder spacing."""
        return _period_averaged(self, thresholds, logstep, backend)

    @cached_property
    def _profile(self):
        mid = self.g1 + 0.5 * (self.b + self.c)
        log_mid = np.log(np.maximum(mid, 1e-300))
        lo, hi = float(log_mid.min()), float(log_mid.max())
        if hi <= lo:
            hi = lo + 1.0
        width = self.b + self.c
        prof = np.zeros(_PROFILE_BINS)
        idx = np.clip(((log_mid - lo) / (hi - lo) * _PROFILE_BINS).astype(int),
                      0, _PROFILE_BINS - 1)
        np.maximum.at(prof, idx, width)
        dilated = prof.copy()
        for shift in (-2, -1, 1, 2):
            rolled = np.roll(prof, shift)
            if shift > 0:
                rolled[:shift] = 0.0
            else:
                rolled[shift:] = 0.0
            dilated = np.maximum(dilated, rolled)
        centers = lo + (np.arange(_PROFILE_BINS) + 0.5) * (hi - lo) / _PROFILE_BINS
        nz = dilated > 0.0
        return centers[nz], dilated[nz]

    def masses(self, thresholds, backend="auto"):
        """Mass below each threshold (any order, any sign)."""
        t = np.asarray(thresholds, dtype=np.float64).ravel()
        order = np.argsort(t, kind="stable")
        ts = np.ascontiguousarray(t[order])
        gmax_sorted, prefix = self._full_sweep
        full = prefix[np.searchsorted(gmax_sorted, ts, side="right")]
        strad = _impl(backend).straddle_masses(self.g1, self.b, self.c,
                                               self.w, ts)
        out = np.empty_like(ts)
        out[order] = full + np.asarray(strad)
        return out.reshape(np.shape(thresholds))

    def density(self, thresholds, backend="auto"):
        """Exact t-derivative of masses() under the same cell model. Only
        straddling cells contribute, so no full-cell prefix is involved."""
        t = np.asarray(thresholds, dtype=np.float64).ravel()
        order = np.argsort(t, kind="stable")
        ts = np.ascontiguousarray(t[order])
        strad = _impl(backend).straddle_density(self.g1, self.b, self.c,
                                                self.w, ts)
        out = np.empty_like(ts)
        out[order] = np.asarray(strad)
        return out.reshape(np.shape(thresholds))

    def width_at(self, level):
        """Typical straddling-cell cost width near the given level (scalar
        or array), for finite-difference step selection."""
        lv = np.asarray(level, dtype=np.float64)
        log_mid, width = self._profile
        if log_mid.size == 0:
            out = np.zeros_like(lv)
        else:
            out = np.interp(np.log(lv), log_mid, width)
        return float(out) if np.isscalar(level) else out


def cube_cut_fractions(tau, a1, a2, a3):
    """Volume fraction of the unit cube below a linear level: offsets tau
    from the low corner, nonnegative axis slopes a1, a2, a3."""
    total = a1 + a2 + a3
    floor = 1e-6 * np.maximum(total, 1e-300)
    a1 = np.maximum(a1, floor)
    a2 = np.maximum(a2, floor)
    a3 = np.maximum(a3, floor)

    def cube(v):
        return np.clip(v, 0.0, None) ** 3

    num = (cube(tau)
           - cube(tau - a1) - cube(tau - a2) - cube(tau - a3)
           + cube(tau - a1 - a2) + cube(tau - a1 - a3) + cube(tau - a2 - a3)
           - cube(tau - a1 - a2 - a3))
    frac = num / (6.0 * a1 * a2 * a3)
    return np.clip(frac, 0.0, 1.0)


def cube_cut_density(tau, a1, a2, a3):
    """tau-derivative of cube_cut_fractions (cut cross-section area)."""
    total = a1 + a2 + a3
    floor = 1e-6 * np.maximum(total, 1e-300)
    a1 = np.maximum(a1, floor)
    a2 = np.maximum(a2, floor)
    a3 = np.maximum(a3, floor)

    def square(v):
        return np.clip(v, 0.0, None) ** 2

    num = (square(tau)
           - square(tau - a1) - square(tau - a2) - square(tau - a3)
           + square(tau - a1 - a2) + square(tau - a1 - a3)
           + square(tau - a2 - a3)
           - square(tau - a1 - a2 - a3))
    return np.clip(num / (2.0 * a1 * a2 * a3), 0.0, None)


@dataclass
class SublevelField3:
    """Linear-model geometry of a 3-D corner field, swept directly."""

    g1: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    w: np.ndarray
    cost_min: float
    cost_max: float

    @classmethod
    def from_corners(cls, corner, cell_weights):
        if corner.ndim != 3:
            raise DimensionMismatchError(
                f"expected a 3-D corner field, got {corner.ndim}-D")
        slopes = []
        for axis in range(3):
            hi = [slice(None)] * 3
            lo = [slice(None)] * 3
            hi[axis] = slice(1, None)
            lo[axis] = slice(None, -1)
            diff = corner[tuple(hi)] - corner[tuple(lo)]
            # average the four parallel edges of each cell
            for other in range(3):
                if other == axis:
                    continue
                a = [slice(None)] * 3
                b = [slice(None)] * 3
                a[other] = slice(None, -1)
                b[other] = slice(1, None)
                diff = 0.5 * (diff[tuple(a)] + diff[tuple(b)])
            slopes.append(np.abs(diff).ravel())
        mean = corner_mean(corner).ravel()
        a1, a2, a3 = slopes
        g1 = mean - 0.5 * (a1 + a2 + a3)
        w = np.asarray(cell_weights, dtype=np.float64).ravel()
        gmax = g1 + a1 + a2 + a3
        return cls(g1=g1, a1=a1, a2=a2, a3=a3, w=w,
                   cost_min=float(g1.min()), cost_max=float(gmax.max()))

    def masses(self, thresholds, backend="auto"):
        t = np.asarray(thresholds, dtype=np.float64).ravel()
        out = np.empty(t.size)
        for j, tv in enumerate(t):
            frac = cube_cut_fractions(tv - self.g1, self.a1, self.a2, self.a3)
            out[j] = float(np.dot(self.w, frac))
        return out.reshape(np.shape(thresholds))

    def density(self, thresholds, backend="auto"):
        t = np.asarray(thresholds, dtype=np.float64).ravel()
        out = np.empty(t.size)
        for j, tv in enumerate(t):
            dens = cube_cut_density(tv - self.g1, self.a1, self.a2, self.a3)
            out[j] = float(np.dot(self.w, dens))
        return out.reshape(np.shape(thresholds))

    def level_density(self, thresholds, logstep, backend="auto"):
        """See SublevelField.level_density."""
        return _period_averaged(self, thresholds, logstep, backend)

    def width_at(self, level):
        span = self.a1 + self.a2 + self.a3
        mid = self.g1 + 0.5 * span
        near = np.abs(np.log(np.maximum(mid, 1e-300)) - np.log(level)) < 0.1
        if not np.any(near):
            return float(np.median(span))
        return float(span[near].max())


def _period_averaged(fld, thresholds, logstep, backend):
    t = np.asarray(thresholds, dtype=np.float64).ravel()
    nt = t.size
    lo1, hi1 = np.exp(-0.5 * logstep), np.exp(0.5 * logstep)
    lo2, hi2 = lo1 * lo1, hi1 * hi1
    batch = np.concatenate([t * lo1, t * hi1, t * lo2, t * hi2])
    m = fld.masses(batch, backend=backend)
    one = (m[nt:2 * nt] - m[:nt]) / (t * (hi1 - lo1))
    two = (m[3 * nt:] - m[2 * nt:3 * nt]) / (t * (hi2 - lo2))
    out = (4.0 * one - two) / 3.0
    return out.reshape(np.shape(thresholds))


def boundary_ring(corner, masses):
    """Sublevel field of just the outermost subcell layer of the box.

    Used as a coverage sentinel: a level set that crosses the box boundary
    where the density still has mass shows up as ring mass near that level.
    Corner and edge subcells are counted once per touching face, which only
    makes the sentinel more conservative.
    """
    nd = corner.ndim
    slabs = []
    for axis in range(nd):
        first = [slice(None)] * nd
        last = [slice(None)] * nd
        mfirst = [slice(None)] * nd
        mlast = [slice(None)] * nd
        first[axis] = slice(0, 2)
        last[axis] = slice(corner.shape[axis] - 2, corner.shape[axis])
        mfirst[axis] = slice(0, 1)
        mlast[axis] = slice(masses.shape[axis] - 1, masses.shape[axis])
        slabs.append((corner[tuple(first)], masses[tuple(mfirst)]))
        slabs.append((corner[tuple(last)], masses[tuple(mlast)]))
    if nd == 2:
        g1s, bs, cs, ws = [], [], [], []
        for sc, sm in slabs:
            g1, b, c = subcell_geometry(sc)
            g1s.append(g1.ravel())
            bs.append(b.ravel())
            cs.append(c.ravel())
            ws.append(np.asarray(sm, dtype=np.float64).ravel())
        return SublevelField.from_geometry(np.concatenate(g1s),
                                           np.concatenate(bs),
                                           np.concatenate(cs),
                                           np.concatenate(ws))
    if nd == 3:
        parts = [SublevelField3.from_corners(sc, sm) for sc, sm in slabs]
        return SublevelField3(
            g1=np.concatenate([p.g1 for p in parts]),
            a1=np.concatenate([p.a1 for p in parts]),
            a2=np.concatenate([p.a2 for p in parts]),
            a3=np.concatenate([p.a3 for p in parts]),
            w=np.concatenate([p.w for p in parts]),
            cost_min=min(p.cost_min for p in parts),
            cost_max=max(p.cost_max for p in parts),
        )
    raise DimensionMismatchError(
        f"boundary ring supports 2 or 3 axes, got {nd}")
