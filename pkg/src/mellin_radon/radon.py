"""Forward transforms of densities on log grids.

Three operators share one engine. The generalized Radon transform is the
derivative, at level one, of the mass below a cost threshold, evaluated
either as the exact derivative of the piecewise cell model or as a
finite-difference stencil of sublevel masses. The profit functional is an
exact prefix sum over cells sorted by cost. The kernel transform integrates
a profile of the cost against the cell masses.

Point evaluation rescales coordinates per point. Grid sweeps exploit the
multiplicative structure instead: points on one diagonal of the price grid
share a direction, and shifting a direction by whole grid steps slides a
window over a single extended cost field, so the whole sweep needs only two
field evaluations (integer and half-step alignments).

Every evaluation is the transform of the density clipped to its box, which
is only the right answer when the level set (or sublevel region) meets the
box boundary where the density carries no mass. Coverage is therefore
decided by a mass sentinel: the contribution of the outermost subcell layer
must be a negligible share of the point's value. Point evaluators raise
CoverageError at uncovered points; sweeps record them as zeros and report
the covered fraction.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cost import CostExpr, eval_cost, grad_cost
from .errors import CoverageError, DimensionMismatchError, ValidationError
from .grids import GridFunction, LogGrid
from .kernels import kernel_eval
from .sublevel import (SublevelField, SublevelField3, boundary_ring,
                       cell_masses, center_mean_shift, refined_cell_masses,
                       refined_corner_costs, refined_tilt_slopes,
                       subcell_geometry, subcell_mean_shift, _eval_on_axes)

DEFAULT_POINT_REFINE = 4
DEFAULT_SWEEP_REFINE = 2
DEFAULT_DELTA_FACTOR = 4.0
DEFAULT_FD_ORDER = 4

# a point counts as covered when the boundary layer's share of its value
# stays below this; well under the level-density estimator's own
# discretization error, so clipping never dominates a covered value
RING_EPS = 1e-5

_KERNEL_BINS = 4096

_FD_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]),
        np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


def _stencil(fd_order):
    try:
        return _FD_STENCILS[fd_order]
    except KeyError:
        raise ValidationError(
            f"fd_order must be one of {sorted(_FD_STENCILS)}, got {fd_order}")


def _points_array(points, n):
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != n:
        raise DimensionMismatchError(
            f"points must have shape (*, {n}), got {np.asarray(points).shape}")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValidationError("price points must be positive and finite")
    return pts, single


def _ring_values(values: np.ndarray, masses: np.ndarray):
    """Boundary-layer entries of a cell-value array with matching masses.
    Corner cells appear once per touching face (conservative sentinel)."""
    vs, ms = [], []
    for axis in range(values.ndim):
        for edge in (0, values.shape[axis] - 1):
            sl = [slice(None)] * values.ndim
            sl[axis] = edge
            vs.append(values[tuple(sl)].ravel())
            ms.append(masses[tuple(sl)].ravel())
    return np.concatenate(vs), np.concatenate(ms)


def _point_field(f, q, p, refine, backend):
    corner = refined_corner_costs(q, f.grid, p, refine)
    masses = refined_cell_masses(f, refine)
    ring = boundary_ring(corner, masses)
    if f.grid.ndim == 2:
        shift = subcell_mean_shift(corner, *refined_tilt_slopes(f, refine))
        return SublevelField.from_corners(corner, masses, shift), ring
    if f.grid.ndim == 3:
        return SublevelField3.from_corners(corner, masses), ring
    raise DimensionMismatchError(
        f"volume scheme supports 2 or 3 axes, got {f.grid.ndim}")


def radon_forward(f: GridFunction, q, points, scheme="volume",
                  refine=DEFAULT_POINT_REFINE, fd_order=DEFAULT_FD_ORDER,
                  delta_factor=DEFAULT_DELTA_FACTOR, backend="auto",
                  deriv="model"):
    """Radon transform of f at the given price points.

    The volume scheme differentiates sublevel masses and works in two or
    three dimensions; the curve scheme integrates along the level curve
    itself and is a two-dimensional cross-check requiring a cost expression
    (it needs the analytic gradient).

    deriv selects how the volume scheme takes the t-derivative: "model"
    evaluates the exact derivative of the piecewise cell model, "fd" runs a
    centered stencil of order fd_order with step delta_factor * cell width.
    Both share the same coverage checks.
    """
    pts, single = _points_array(points, f.grid.ndim)
    if scheme == "curve":
        out = _radon_curve(f, q, pts)
    elif scheme == "volume":
        if deriv not in ("model", "fd"):
            raise ValidationError(f"unknown deriv {deriv!r}")
        offsets, weights = _stencil(fd_order)
        logstep = max(f.grid.dy) / refine
        out = np.empty(len(pts))
        for j, p in enumerate(pts):
            fld, ring = _point_field(f, q, p, refine, backend)
            width = fld.width_at(1.0)
            if width <= 0.0 or not fld.cost_min < 1.0 < fld.cost_max:
                raise CoverageError(
                    f"level set at p={tuple(p)} lies outside the sampled "
                    f"cost range [{fld.cost_min:.3g}, {fld.cost_max:.3g}]")
            if deriv == "model":
                one = np.array([1.0])
                val = float(fld.level_density(one, logstep,
                                              backend=backend)[0])
                leak = float(ring.density(one, backend=backend)[0])
                scale = val
            else:
                delta = min(delta_factor * width, 0.2)
                thr = 1.0 + offsets * delta
                vols = fld.masses(thr, backend=backend)
                val = float(np.dot(weights, vols)) / delta
                band = np.array([thr[0], thr[-1]])
                leak = float(np.diff(ring.masses(band, backend=backend))[0])
                scale = float(vols[-1] - vols[0])
            if leak > RING_EPS * abs(scale) + 1e-300:
                raise CoverageError(
                    f"level set at p={tuple(p)} crosses the box boundary "
                    f"where the density still has mass (boundary share "
                    f"{leak / max(abs(scale), 1e-300):.2e}); enlarge the "
                    "grid box")
            out[j] = val
    else:
        raise ValidationError(f"unknown scheme {scheme!r}")
    return out[0] if single else out


def profit_forward(f: GridFunction, q, points, p0=1.0,
                   refine=DEFAULT_POINT_REFINE):
    """Profit functional at the given price points for output price p0.

    Raises CoverageError when a non-negligible share of the mass cheaper
    than p0 sits in the boundary layer, since the sublevel region then
    extends past the box."""
    if p0 <= 0:
        raise ValidationError(f"p0 must be positive, got {p0}")
    pts, single = _points_array(points, f.grid.ndim)
    masses = refined_cell_masses(f, refine)
    slopes = refined_tilt_slopes(f, refine) if f.grid.ndim == 2 else None
    out = np.empty(len(pts))
    for j, p in enumerate(pts):
        qc = refined_corner_costs(q, f.grid, p, refine, centers=True)
        if slopes is not None:
            qc = qc + center_mean_shift(qc, *slopes)
        below = qc < p0
        rq, rm = _ring_values(qc, masses)
        leak = float(rm[rq < p0].sum())
        total = float(masses[below].sum())
        if leak > RING_EPS * total + 1e-300:
            raise CoverageError(
                f"sublevel region at p={tuple(p)} reaches the box boundary "
                f"with mass share {leak / max(total, 1e-300):.2e}; enlarge "
                "the grid box")
        out[j] = float(np.sum(masses[below] * (p0 - qc[below])))
    return out[0] if single else out


def kernel_forward(f: GridFunction, q, h, points, refine=DEFAULT_POINT_REFINE):
    """Kernel transform of f: integral of h(cost) against the density.

    Raises CoverageError when the boundary layer contributes a
    non-negligible share of the integral of |h| against the density."""
    pts, single = _points_array(points, f.grid.ndim)
    masses = refined_cell_masses(f, refine)
    slopes = refined_tilt_slopes(f, refine) if f.grid.ndim == 2 else None
    out = np.empty(len(pts))
    for j, p in enumerate(pts):
        qc = refined_corner_costs(q, f.grid, p, refine, centers=True)
        if slopes is not None:
            qc = qc + center_mean_shift(qc, *slopes)
        hv = kernel_eval(h, qc)
        rq, rm = _ring_values(qc, masses)
        leak = float(np.sum(rm * np.abs(kernel_eval(h, rq))))
        ref = float(np.sum(masses * np.abs(hv)))
        if leak > RING_EPS * ref + 1e-300:
            raise CoverageError(
                f"kernel mass at p={tuple(p)} leaks through the box "
                f"boundary (share {leak / max(ref, 1e-300):.2e}); enlarge "
                "the grid box")
        out[j] = float(np.sum(masses * hv))
    return out[0] if single else out


def _radon_curve(f, q, pts, panels=8, nodes=32, depth=45.0, bisect_iters=60):
    if f.grid.ndim != 2:
        raise DimensionMismatchError("the curve scheme is two-dimensional")
    if not isinstance(q, CostExpr):
        raise ValidationError(
            "the curve scheme needs an analytic cost expression")
    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes)

    y_lo = np.array([y0 for y0 in f.grid.y0])
    y_hi = np.array([y0 + dy * (n - 1)
                     for y0, dy, n in zip(f.grid.y0, f.grid.dy, f.grid.shape)])

    def interp_f(x1, x2):
        yy1 = (np.log(x1) - f.grid.y0[0]) / f.grid.dy[0]
        yy2 = (np.log(x2) - f.grid.y0[1]) / f.grid.dy[1]
        n1, n2 = f.grid.shape
        inside = ((yy1 >= 0) & (yy1 <= n1 - 1) & (yy2 >= 0) & (yy2 <= n2 - 1))
        i1 = np.clip(yy1.astype(int), 0, n1 - 2)
        i2 = np.clip(yy2.astype(int), 0, n2 - 2)
        t1 = np.clip(yy1 - i1, 0.0, 1.0)
        t2 = np.clip(yy2 - i2, 0.0, 1.0)
        v = (f.values[i1, i2] * (1 - t1) * (1 - t2)
             + f.values[i1 + 1, i2] * t1 * (1 - t2)
             + f.values[i1, i2 + 1] * (1 - t1) * t2
             + f.values[i1 + 1, i2 + 1] * t1 * t2)
        return np.where(inside, v, 0.0)

    def solve_conjugate(x_known, p, known_axis):
        # log-bisection for the other coordinate on {q_p = 1}
        lo = np.full_like(x_known, -40.0)
        hi = np.full_like(x_known, 40.0)
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if known_axis == 0:
                pts2 = np.stack([p[0] * x_known, p[1] * np.exp(mid)], axis=-1)
            else:
                pts2 = np.stack([p[0] * np.exp(mid), p[1] * x_known], axis=-1)
            high = eval_cost(q, pts2) > 1.0
            hi = np.where(high, mid, hi)
            lo = np.where(high, lo, mid)
        return np.exp(0.5 * (lo + hi))

    out = np.empty(len(pts))
    for j, p in enumerate(pts):
        x_d = 1.0 / float(eval_cost(q, np.array([p[0], p[1]])))
        total = 0.0
        for branch_axis in (0, 1):
            v_hi = np.log(x_d)
            edges = np.linspace(v_hi - depth, v_hi, panels + 1)
            for k in range(panels):
                a, b = edges[k], edges[k + 1]
                v = 0.5 * (b - a) * gl_x + 0.5 * (a + b)
                w = 0.5 * (b - a) * gl_w
                x_known = np.exp(v)
                x_other = solve_conjugate(x_known, p, branch_axis)
                if branch_axis == 0:
                    x1, x2 = x_known, x_other
                else:
                    x1, x2 = x_other, x_known
                grads = grad_cost(q, np.stack([p[0] * x1, p[1] * x2], axis=-1))
                dq = np.abs(grads[..., 1 - branch_axis]) * p[1 - branch_axis]
                fv = interp_f(x1, x2)
                total += float(np.sum(w * fv / dq * x_known))
        out[j] = total
    return out


# ---------------------------------------------------------------------------
# grid sweeps

@dataclass
class SweepInfo:
    """Bookkeeping from a grid sweep."""

    covered_fraction: float
    fast_path: bool
    seconds: float
    refine: int = 1
    fd_order: int = 0

    def to_dict(self):
        return {
            "covered_fraction": self.covered_fraction,
            "fast_path": self.fast_path,
            "seconds": self.seconds,
            "refine": self.refine,
            "fd_order": self.fd_order,
        }


def _diag_ratio(xgrid: LogGrid, pgrid: LogGrid, refine: int):
    """Refined steps per price step along the shared-direction diagonals,
    or None when the grids do not align."""
    if xgrid.ndim != 2 or pgrid.ndim != 2:
        return None
    dyx1, dyx2 = xgrid.dy
    dyp1, dyp2 = pgrid.dy
    if abs(dyx1 - dyx2) > 1e-12 * dyx1 or abs(dyp1 - dyp2) > 1e-12 * dyp1:
        return None
    rho = refine * dyp1 / dyx1
    if abs(rho - round(rho)) > 1e-9:
        return None
    return int(round(rho))


def _extended_fields(q, xgrid, pgrid, refine, centers, rho):
    """Two cost fields (whole-step and half-step alignment) covering every
    diagonal's shifted window."""
    n1, n2 = xgrid.shape
    if centers:
        counts = (refine * (n1 - 1), refine * (n2 - 1))
        offs = 0.5
    else:
        counts = (refine * (n1 - 1) + 1, refine * (n2 - 1) + 1)
        offs = 0.0
    delta = xgrid.dy[0] / refine
    dmax = max(pgrid.shape) - 1
    smax = int(np.ceil(dmax * rho / 2.0)) + 1
    beta = 0.5 * (pgrid.y0[0] - pgrid.y0[1])

    def field(half):
        axes = []
        for axis, (y0, cnt) in enumerate(zip(xgrid.y0, counts)):
            sgn = 1.0 if axis == 0 else -1.0
            shift = sgn * (beta + (0.5 * delta if half else 0.0))
            m = np.arange(-smax, cnt + smax)
            axes.append(np.exp(y0 + shift + (m + offs) * delta))
        return _eval_on_axes(q, axes)

    return field(False), field(True), smax


def _diag_view(field_a, field_b, d, rho, smax, counts):
    s2 = d * rho
    if s2 % 2 == 0:
        sigma, fld = s2 // 2, field_a
    else:
        sigma, fld = (s2 - 1) // 2, field_b
    return fld[smax + sigma: smax + sigma + counts[0],
               smax - sigma: smax - sigma + counts[1]]


def _diag_points(pgrid, d):
    n1, n2 = pgrid.shape
    k1 = np.arange(max(0, d), min(n1 - 1, n2 - 1 + d) + 1)
    k2 = k1 - d
    logt = 0.5 * (pgrid.y0[0] + pgrid.y0[1] + (k1 + k2) * pgrid.dy[0])
    return k1, k2, np.exp(logt)


def _run_diagonals(pgrid, worker, threads):
    n1, n2 = pgrid.shape
    ds = range(-(n2 - 1), n1)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(worker, ds))
    else:
        for d in ds:
            worker(d)


def radon_sweep(f: GridFunction, q, pgrid: LogGrid,
                refine=DEFAULT_SWEEP_REFINE, fd_order=DEFAULT_FD_ORDER,
                delta_factor=DEFAULT_DELTA_FACTOR, backend="auto", threads=1,
                deriv="model"):
    """Radon transform on a whole price grid. Returns the transform values
    and sweep bookkeeping; points whose trusted cost window does not contain
    the level get a zero value and are counted out of the covered fraction.

    deriv follows radon_forward: "model" evaluates the exact derivative of
    the cell model at the level, "fd" differences sublevel masses."""
    if deriv not in ("model", "fd"):
        raise ValidationError(f"unknown deriv {deriv!r}")
    t_start = time.time()
    offsets, weights = _stencil(fd_order)
    rho = _diag_ratio(f.grid, pgrid, refine)
    if rho is None:
        return _sweep_pointwise(f, q, pgrid, t_start, radon_forward,
                                scheme="volume", refine=refine,
                                fd_order=fd_order, delta_factor=delta_factor,
                                backend=backend, deriv=deriv)
    field_a, field_b, smax = _extended_fields(q, f.grid, pgrid, refine,
                                              centers=False, rho=rho)
    counts = tuple(refine * (n - 1) + 1 for n in f.grid.shape)
    masses = refined_cell_masses(f, refine)
    slopes = refined_tilt_slopes(f, refine)
    logstep = max(f.grid.dy) / refine
    out = np.zeros(pgrid.shape)
    covered = np.zeros(pgrid.shape, dtype=bool)

    def worker(d):
        k1, k2, ts = _diag_points(pgrid, d)
        view = _diag_view(field_a, field_b, d, rho, smax, counts)
        shift = subcell_mean_shift(view, *slopes)
        fld = SublevelField.from_corners(view, masses, shift)
        ring = boundary_ring(view, masses)
        u0 = 1.0 / ts
        vals = np.zeros(len(ts))
        leak = np.zeros(len(ts))
        scale = np.zeros(len(ts))
        sel = (u0 > fld.cost_min) & (u0 < fld.cost_max)
        if np.any(sel):
            if deriv == "model":
                dens = fld.level_density(u0[sel], logstep, backend=backend)
                vals[sel] = dens / ts[sel]
                leak[sel] = ring.density(u0[sel], backend=backend)
                scale[sel] = dens
            else:
                delta = delta_factor * fld.width_at(u0[sel])
                delta = np.minimum(delta, 0.2 * u0[sel])
                thr = u0[sel, None] + offsets[None, :] * delta[:, None]
                vols = fld.masses(thr.ravel(), backend=backend)
                vols = vols.reshape(thr.shape)
                good = delta > 0.0
                vals[sel] = np.where(
                    good, (vols @ weights) / np.where(good, delta, 1.0), 0.0
                ) / ts[sel]
                rmass = ring.masses(thr[:, [0, -1]].ravel(), backend=backend)
                rmass = rmass.reshape(-1, 2)
                leak[sel] = np.where(good, rmass[:, 1] - rmass[:, 0], np.inf)
                scale[sel] = vols[:, -1] - vols[:, 0]
        # values stay at uncovered points: the clipped transform is
        # continuous there, and zeroing would put a jump into the data
        ok = sel & (leak <= RING_EPS * np.abs(scale) + 1e-300)
        out[k1, k2] = vals
        covered[k1, k2] = ok

    _run_diagonals(pgrid, worker, threads)
    info = SweepInfo(covered_fraction=float(covered.mean()), fast_path=True,
                     seconds=time.time() - t_start, refine=refine,
                     fd_order=fd_order)
    return GridFunction(grid=pgrid, values=out), info


def profit_sweep(f: GridFunction, q, pgrid: LogGrid, p0=1.0,
                 refine=DEFAULT_SWEEP_REFINE, threads=1):
    """Profit functional on a whole price grid, exact per cell: cells sorted
    by cost once per diagonal, then every price point is a prefix sum."""
    if p0 <= 0:
        raise ValidationError(f"p0 must be positive, got {p0}")
    t_start = time.time()
    rho = _diag_ratio(f.grid, pgrid, refine)
    if rho is None:
        return _sweep_pointwise(f, q, pgrid, t_start, profit_forward, p0=p0,
                                refine=refine)
    field_a, field_b, smax = _extended_fields(q, f.grid, pgrid, refine,
                                              centers=True, rho=rho)
    counts = tuple(refine * (n - 1) for n in f.grid.shape)
    mshaped = refined_cell_masses(f, refine)
    masses = mshaped.ravel()
    slopes = refined_tilt_slopes(f, refine)
    out = np.zeros(pgrid.shape)
    covered = np.zeros(pgrid.shape, dtype=bool)

    def worker(d):
        k1, k2, ts = _diag_points(pgrid, d)
        view = _diag_view(field_a, field_b, d, rho, smax, counts)
        qview = view + center_mean_shift(view, *slopes)
        qv = qview.ravel()
        order = np.argsort(qv, kind="stable")
        qs = qv[order]
        pref0 = np.concatenate(([0.0], np.cumsum(masses[order])))
        pref1 = np.concatenate(([0.0], np.cumsum(masses[order] * qs)))
        tau = p0 / ts
        pos = np.searchsorted(qs, tau, side="right")
        out[k1, k2] = p0 * pref0[pos] - ts * pref1[pos]
        rq, rm = _ring_values(qview, mshaped)
        rorder = np.argsort(rq, kind="stable")
        rpref = np.concatenate(([0.0], np.cumsum(rm[rorder])))
        rmass = rpref[np.searchsorted(rq[rorder], tau, side="right")]
        covered[k1, k2] = rmass <= RING_EPS * pref0[pos] + 1e-300

    _run_diagonals(pgrid, worker, threads)
    info = SweepInfo(covered_fraction=float(covered.mean()), fast_path=True,
                     seconds=time.time() - t_start, refine=refine)
    return GridFunction(grid=pgrid, values=out), info


def kernel_sweep(f: GridFunction, q, h, pgrid: LogGrid,
                 refine=DEFAULT_SWEEP_REFINE, threads=1, bins=_KERNEL_BINS):
    """Kernel transform on a whole price grid via a per-diagonal mass
    histogram over log cost."""
    t_start = time.time()
    rho = _diag_ratio(f.grid, pgrid, refine)
    if rho is None:
        return _sweep_pointwise(f, q, pgrid, t_start, kernel_forward, h,
                                refine=refine)
    field_a, field_b, smax = _extended_fields(q, f.grid, pgrid, refine,
                                              centers=True, rho=rho)
    counts = tuple(refine * (n - 1) for n in f.grid.shape)
    mshaped = refined_cell_masses(f, refine)
    masses = mshaped.ravel()
    slopes = refined_tilt_slopes(f, refine)
    out = np.zeros(pgrid.shape)
    covered = np.zeros(pgrid.shape, dtype=bool)

    def worker(d):
        k1, k2, ts = _diag_points(pgrid, d)
        view = _diag_view(field_a, field_b, d, rho, smax, counts)
        qview = view + center_mean_shift(view, *slopes)
        qv = qview.ravel()
        lo, hi = np.log(qv.min()), np.log(qv.max())
        if hi <= lo:
            hi = lo + 1e-12
        width = (hi - lo) / bins
        logq = np.log(qv)
        idx = np.clip(((logq - lo) / (hi - lo) * bins).astype(int),
                      0, bins - 1)
        hist = np.bincount(idx, weights=masses, minlength=bins)
        # first moment of the log-cost offset inside each bin restores the
        # within-bin placement to first order (binning alone is O(width))
        offs = logq - (lo + (idx + 0.5) * width)
        drift = np.bincount(idx, weights=masses * offs, minlength=bins)
        rq, rm = _ring_values(qview, mshaped)
        ridx = np.clip(((np.log(rq) - lo) / (hi - lo) * bins).astype(int),
                       0, bins - 1)
        rhist = np.bincount(ridx, weights=rm, minlength=bins)
        mids = np.exp(lo + (np.arange(bins) + 0.5) * width)
        hv = kernel_eval(h, ts[:, None] * mids[None, :])
        slope = np.gradient(hv, width, axis=1)
        out[k1, k2] = hv @ hist + slope @ drift
        ref = np.abs(hv) @ hist
        leak = np.abs(hv) @ rhist
        covered[k1, k2] = leak <= RING_EPS * ref + 1e-300

    _run_diagonals(pgrid, worker, threads)
    info = SweepInfo(covered_fraction=float(covered.mean()), fast_path=True,
                     seconds=time.time() - t_start, refine=refine)
    return GridFunction(grid=pgrid, values=out), info


def _sweep_pointwise(f, q, pgrid, t_start, fn, *args, **kwargs):
    # alignment fallback: evaluate every grid point independently
    mesh = np.meshgrid(*pgrid.x_axes(), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.empty(len(pts))
    ok = np.ones(len(pts), dtype=bool)
    for j, p in enumerate(pts):
        try:
            vals[j] = fn(f, q, *args, p, **kwargs)
        except CoverageError:
            vals[j] = 0.0
            ok[j] = False
    info = SweepInfo(covered_fraction=float(ok.mean()), fast_path=False,
                     seconds=time.time() - t_start,
                     refine=kwargs.get("refine", 1),
                     fd_order=kwargs.get("fd_order", 0))
    return GridFunction(grid=pgrid, values=vals.reshape(pgrid.shape)), info
