"""Cross-checks tying the forward operators to their Mellin factorizations.

Everything here is a consistency check, not a solver: weighted norms and the
operator norm inequalities, the layer-cake identity relating a density's
total mass to its transform along one direction, the single-point price
integral factorization, and the residuals of the projection identities on a
frequency lattice. These are the quantities the acceptance tests and the
self-test pin down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostExpr
from .errors import (DimensionMismatchError, GridMismatchError,
                     ValidationError)
from .gammafn import complex_gamma
from .grids import GridFunction, LogGrid, MellinSlice
from .kernels import (ExponentialKernel, ProfitKernel, SampledKernel,
                      kernel_abs_mellin, kernel_eval, kernel_mellin)
from .mellin import mellin_exp_cost, mellin_forward, negate_frequencies
from .radon import (_point_field, _stencil, profit_sweep,
                    radon_forward, radon_sweep)
from .sublevel import cell_masses


def weighted_norm(g: GridFunction, r, c) -> float:
    """Power-weighted norm of a grid function: the r-integral of |g| against
    x^{rc - 1} per axis, or the weighted sup for r = inf."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (g.grid.ndim,):
        raise DimensionMismatchError(
            f"c must have shape ({g.grid.ndim},), got {c.shape}")
    logw = np.zeros(g.grid.shape)
    for axis, (y0, dy, n) in enumerate(zip(g.grid.y0, g.grid.dy, g.grid.shape)):
        shape = [1] * g.grid.ndim
        shape[axis] = n
        logw = logw + (y0 + np.arange(n) * dy).reshape(shape) * c[axis]
    if np.isinf(r):
        return float(np.max(np.abs(g.values) * np.exp(logw)))
    if r <= 0:
        raise ValidationError(f"norm order must be positive, got {r}")
    vals = np.abs(g.values) ** r * np.exp(r * logw)
    return float(np.sum(vals) * np.prod(g.grid.dy)) ** (1.0 / r)


def exp_cost_norm(q: CostExpr, c) -> float:
    """Weighted L1 norm of e^{-q}, evaluated in closed form."""
    val = mellin_exp_cost(q, np.asarray(c, dtype=np.complex128))
    return float(np.real(val))


@dataclass
class NormRow:
    """One operator norm inequality instance."""

    operator: str
    r: float
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def relative_slack(self) -> float:
        return self.slack / self.rhs if self.rhs else np.inf


def check_norm_inequalities(f: GridFunction, q: CostExpr, c,
                            r_values=(1.0, 2.0, np.inf), h=None, p0=1.0,
                            pgrid: LogGrid | None = None,
                            backend="auto") -> list[NormRow]:
    """Evaluate both sides of the transform norm bounds.

    The Radon bound is Gamma(alpha)^{-1} ||e^{-q}||_{1,c} ||f||_{r,1-c} with
    alpha the sum of c; the kernel transform picks up the extra |h| factor
    and the profit section trades Gamma(alpha) for p0^{alpha+1}/Gamma(alpha+2).
    Transform norms are taken over the price grid (the sample grid's own
    window when none is given), so the left side is truncated and slack
    stays nonnegative.
    """
    c = np.asarray(c, dtype=np.float64)
    n = f.grid.ndim
    if c.shape != (n,):
        raise DimensionMismatchError(f"c must have shape ({n},), got {c.shape}")
    if pgrid is None:
        pgrid = f.grid
    alpha = float(c.sum())
    ones = np.ones(n)
    qnorm = exp_cost_norm(q, c)
    gamma_alpha = float(np.real(complex_gamma(np.array(alpha + 0j))))
    gamma_a2 = float(np.real(complex_gamma(np.array(alpha + 2 + 0j))))

    rows = []
    radon_vals, _ = radon_sweep(f, q, pgrid, backend=backend)
    profit_vals, _ = profit_sweep(f, q, pgrid, p0=p0)
    for r in r_values:
        fnorm = weighted_norm(f, r, ones - c)
        rows.append(NormRow("radon", float(r),
                            weighted_norm(radon_vals, r, c),
                            qnorm * fnorm / gamma_alpha))
        rows.append(NormRow("profit", float(r),
                            weighted_norm(profit_vals, r, c),
                            p0 ** (alpha + 1) * qnorm * fnorm / gamma_a2))
    if h is not None:
        from .radon import kernel_sweep

        hnorm = kernel_abs_mellin(h, alpha)
        kern_vals, _ = kernel_sweep(f, q, h, pgrid)
        for r in r_values:
            fnorm = weighted_norm(f, r, ones - c)
            rows.append(NormRow("kernel", float(r),
                                weighted_norm(kern_vals, r, c),
                                qnorm * hnorm * fnorm / gamma_alpha))
    return rows


@dataclass
class CoareaResult:
    total_mass: float
    transform_integral: float

    @property
    def residual(self) -> float:
        return abs(self.transform_integral - self.total_mass) / self.total_mass


def coarea_check(f: GridFunction, q, direction, levels=600,
                 fd_order=4, delta_factor=4.0, refine=2,
                 backend="auto", deriv="model") -> CoareaResult:
    """Layer-cake identity along one direction: integrating the transform
    over all scalings of a single price direction recovers the total mass.

    The level integral spans the box's cost range; mass outside the first
    and last levels is added back from the sublevel count itself. deriv
    follows radon_forward ("model" or "fd").
    """
    direction = np.asarray(direction, dtype=np.float64)
    fld, _ = _point_field(f, q, direction, refine, backend)
    lo = np.log(fld.cost_min) + 1e-6
    hi = np.log(fld.cost_max) - 1e-6
    if hi <= lo:
        raise ValidationError("the sampled cost window is empty; "
                              "enlarge the grid box")
    v = np.linspace(lo, hi, levels)
    ts = np.exp(v)
    if deriv == "model":
        dens = fld.density(ts, backend=backend)
    elif deriv == "fd":
        offsets, weights = _stencil(fd_order)
        delta = np.minimum(delta_factor * fld.width_at(ts), 0.2 * ts)
        delta = np.maximum(delta, 1e-12 * ts)
        thr = ts[:, None] + offsets[None, :] * delta[:, None]
        vols = fld.masses(thr.ravel(), backend=backend).reshape(thr.shape)
        dens = (vols @ weights) / delta
    else:
        raise ValidationError(f"unknown deriv {deriv!r}")
    # integrand of the direction integral, in log level coordinates
    integral = float(np.trapz(dens * ts, v))
    head = float(fld.masses(np.array([ts[0]]), backend=backend)[0])
    tail = fld.total_mass - float(
        fld.masses(np.array([ts[-1]]), backend=backend)[0])
    return CoareaResult(total_mass=float(cell_masses(f).sum()),
                        transform_integral=integral + head + tail)


@dataclass
class FactorizationResult:
    lhs: complex
    rhs: complex

    @property
    def residual(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return abs(self.lhs - self.rhs) / scale if scale else 0.0


def factorization_check(q: CostExpr, h, x, z, panels=12,
                        nodes=24) -> FactorizationResult:
    """Single-point factorization: the price integral of p^{z-1} h(q_p(x))
    times Gamma(s) against the closed form x^{-z} (M e^{-q})(z) (M h)(s)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.complex128)
    n = x.shape[0]
    if z.shape != (n,):
        raise DimensionMismatchError(f"z must have shape ({n},), got {z.shape}")
    if n != 2:
        raise DimensionMismatchError("the price quadrature is two-dimensional")
    s = complex(z.sum())
    lhs = complex_gamma(np.array(s)) * _price_integral(q, h, x, z,
                                                       panels, nodes)
    rhs = (np.prod(x ** (-z)) * mellin_exp_cost(q, z)
           * complex(kernel_mellin(h, np.array([s]))[0]))
    return FactorizationResult(lhs=complex(lhs), rhs=complex(rhs))


def _cost_at_prices(q, x, p1, p2):
    from .cost import eval_cost

    a, b = np.broadcast_arrays(np.asarray(p1) * x[0], np.asarray(p2) * x[1])
    return eval_cost(q, np.stack([a, b], axis=-1))


def _bisect_boundary(fn, target, lo=-45.0, hi=45.0, iters=80):
    # monotone increasing fn of the log coordinate
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(np.exp(mid)) > target:
            hi = mid
        else:
            lo = mid
    return np.exp(0.5 * (lo + hi))


def _gl_panels(lo, hi, panels, nodes):
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    wts = (half[:, None] * gw[None, :]).ravel()
    return pts, wts


def _price_integral(q, h, x, z, panels, nodes):
    depth = 45.0
    if isinstance(h, ProfitKernel):
        # support {q_p(x) <= p0}: fit the outer axis to the section width and
        # the inner axis to the exact boundary, both in log coordinates
        p1_top = _bisect_boundary(
            lambda p1: _cost_at_prices(q, x, p1, np.exp(-depth)), h.p0)
        v1, w1 = _gl_panels(np.log(p1_top) - depth, np.log(p1_top),
                            panels, nodes)
        p1 = np.exp(v1)
        total = 0.0 + 0.0j
        for p1v, w1v in zip(p1, w1):
            p2_top = _bisect_boundary(
                lambda p2: _cost_at_prices(q, x, p1v, p2), h.p0)
            v2, w2 = _gl_panels(np.log(p2_top) - depth, np.log(p2_top),
                                panels, nodes)
            p2 = np.exp(v2)
            vals = kernel_eval(h, _cost_at_prices(q, x, p1v, p2))
            integrand = vals * p1v ** z[0] * p2 ** z[1]
            total += w1v * np.sum(w2 * integrand)
        return total
    if isinstance(h, ExponentialKernel):
        tops = []
        for axis in range(2):
            def fn(pv, axis=axis):
                p = [np.exp(-depth), np.exp(-depth)]
                p[axis] = pv
                return _cost_at_prices(q, x, p[0], p[1])
            tops.append(_bisect_boundary(fn, 45.0))
        v1, w1 = _gl_panels(np.log(tops[0]) - depth, np.log(tops[0]),
                            panels, nodes)
        v2, w2 = _gl_panels(np.log(tops[1]) - depth, np.log(tops[1]),
                            panels, nodes)
        p1, p2 = np.exp(v1), np.exp(v2)
        costs = _cost_at_prices(q, x, p1[:, None], p2[None, :])
        vals = np.exp(-costs) * (p1 ** z[0])[:, None] * (p2 ** z[1])[None, :]
        return complex(np.sum(w1[:, None] * w2[None, :] * vals))
    if isinstance(h, SampledKernel):
        t_hi = float(np.exp(h.grid.y0[0]
                            + h.grid.dy[0] * (h.grid.shape[0] - 1)))
        tops = []
        for axis in range(2):
            def fn(pv, axis=axis):
                p = [np.exp(-depth), np.exp(-depth)]
                p[axis] = pv
                return _cost_at_prices(q, x, p[0], p[1])
            tops.append(_bisect_boundary(fn, t_hi))
        v1, w1 = _gl_panels(np.log(tops[0]) - depth, np.log(tops[0]),
                            4 * panels, nodes)
        v2, w2 = _gl_panels(np.log(tops[1]) - depth, np.log(tops[1]),
                            4 * panels, nodes)
        p1, p2 = np.exp(v1), np.exp(v2)
        costs = _cost_at_prices(q, x, p1[:, None], p2[None, :])
        vals = kernel_eval(h, costs) * (p1 ** z[0])[:, None] \
            * (p2 ** z[1])[None, :]
        return complex(np.sum(w1[:, None] * w2[None, :] * vals))
    raise ValidationError(f"unsupported kernel {type(h).__name__}")


@dataclass
class IdentityResiduals:
    """Projection identity residuals at selected frequencies."""

    frequencies: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs) / np.abs(self.rhs)

    @property
    def max_relative(self) -> float:
        return float(self.relative.max())


def _select_frequencies(magnitude, count, min_sep):
    # the factor magnitudes fall off exponentially in frequency, so a
    # candidate far below the peak would only compare noise against noise
    floor = 1e-10 * float(magnitude.max())
    order = np.argsort(magnitude.ravel())[::-1]
    picked = []
    idx_nd = np.unravel_index(order, magnitude.shape)
    for flat_pos in range(order.size):
        if magnitude.ravel()[order[flat_pos]] < floor:
            break
        cand = tuple(ax[flat_pos] for ax in idx_nd)
        if all(max(abs(a - b) for a, b in zip(cand, prev)) >= min_sep
               for prev in picked):
            picked.append(cand)
            if len(picked) == count:
                break
    return picked


def projection_residuals(f: GridFunction, transform: GridFunction,
                         q: CostExpr, c, count=20, taper=0.0,
                         kind="radon", h=None, p0=1.0,
                         min_sep=2) -> IdentityResiduals:
    """Residuals of the Mellin projection identity between a density and its
    computed transform, at `count` distinct lattice frequencies chosen where
    the density side is largest, at least min_sep lattice steps apart.

    kind selects the factor: "radon" for Gamma(s) alone, "profit" for the
    profit section, "kernel" to include (M h)(s).
    """
    c = np.asarray(c, dtype=np.float64)
    n = f.grid.ndim
    ones = np.ones(n)
    if np.any(c <= 0) or np.any(c >= 1):
        raise ValidationError("c must lie strictly between 0 and 1 per axis "
                              "so both Mellin planes are positive")
    fslice = mellin_forward(f, ones - c, taper=taper)
    gslice = mellin_forward(transform, c, taper=taper)
    # the transform grid may be a same-spacing superset of the density grid;
    # compare on the common frequency sublattice (the density grid's own)
    embed = _embed_indices(f.grid, transform.grid)
    gvals = gslice.values[np.ix_(*embed)]
    fa = f.grid.freq_axes()
    xi = np.meshgrid(*fa, indexing="ij")
    z = np.stack([c[d] + 1j * xi[d] for d in range(n)], axis=-1)
    s = z.sum(axis=-1)
    kq = mellin_exp_cost(q, z)
    fneg = negate_frequencies(fslice.values)
    if kind == "radon":
        lhs = complex_gamma(s) * gvals
        rhs = fneg * kq
    elif kind == "profit":
        lhs = gvals
        rhs = p0 ** (s + 1) / complex_gamma(s + 2) * fneg * kq
    elif kind == "kernel":
        if h is None:
            raise ValidationError("kind='kernel' needs a kernel h")
        su, inv = np.unique(np.round(s.imag, 12), return_inverse=True)
        mh = kernel_mellin(h, s.real.ravel()[0] + 1j * su)[inv].reshape(s.shape)
        lhs = complex_gamma(s) * gvals
        rhs = fneg * kq * mh
    else:
        raise ValidationError(f"unknown identity kind {kind!r}")
    picked = _select_frequencies(np.abs(rhs), count, min_sep=min_sep)
    freqs = np.array([[fa[d][idx[d]] for d in range(n)] for idx in picked])
    lhs_sel = np.array([lhs[idx] for idx in picked])
    rhs_sel = np.array([rhs[idx] for idx in picked])
    return IdentityResiduals(frequencies=freqs, lhs=lhs_sel, rhs=rhs_sel)


def _embed_indices(fgrid, tgrid):
    """Per-axis indices embedding fgrid's frequency lattice into tgrid's.

    Requires equal spacing and the transform shape an integer multiple of
    the density shape per axis; equal shapes embed as the identity."""
    if fgrid.ndim != tgrid.ndim:
        raise GridMismatchError(
            f"density grid has {fgrid.ndim} axes, transform {tgrid.ndim}")
    idx = []
    for d in range(fgrid.ndim):
        if abs(fgrid.dy[d] - tgrid.dy[d]) > 1e-12 * fgrid.dy[d]:
            raise GridMismatchError(
                "frequency lattices only align for equal log spacing; "
                f"axis {d + 1} has {fgrid.dy[d]!r} vs {tgrid.dy[d]!r}")
        nf, nt = fgrid.shape[d], tgrid.shape[d]
        if nt % nf:
            raise GridMismatchError(
                f"transform shape {nt} is not a multiple of {nf} on axis "
                f"{d + 1}")
        step = nt // nf
        idx.append(nt // 2 + step * (np.arange(nf) - nf // 2))
    return idx
