"""Pure numpy fallback for the sublevel straddle kernels.

Same contract as the compiled version: inputs sorted ascending by g1,
thresholds ascending, returns the straddling-cell contribution per threshold
(mass fraction for straddle_masses, its exact t-derivative for
straddle_density). Cells are grouped into power-of-two width classes so each
threshold only touches a searchsorted window per class instead of the whole
array.
"""

from __future__ import annotations

import numpy as np


def _ramp_fraction(tau, b, c):
    """Fraction of a rectangle cell below level g1 + tau under the linear
    model with edge variations b and c. Assumes 0 < tau < b + c."""
    lo = np.minimum(b, c)
    hi = np.maximum(b, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 2.0 * lo * hi
        low_piece = tau * tau / denom
        mid_piece = (tau - 0.5 * lo) / hi
        high_piece = 1.0 - (b + c - tau) ** 2 / denom
        out = np.where(tau <= lo, low_piece,
                       np.where(tau <= hi, mid_piece, high_piece))
        thin = lo <= 1e-12 * hi
        if np.any(thin):
            out = np.where(thin, np.clip(tau / hi, 0.0, 1.0), out)
    return out


def _ramp_density(tau, b, c):
    """t-derivative of _ramp_fraction. Assumes 0 < tau < b + c."""
    lo = np.minimum(b, c)
    hi = np.maximum(b, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = lo * hi
        out = np.where(tau <= lo, tau / denom,
                       np.where(tau <= hi, 1.0 / hi, (b + c - tau) / denom))
        thin = lo <= 1e-12 * hi
        if np.any(thin):
            out = np.where(thin, np.where(tau < hi, 1.0 / hi, 0.0), out)
    return out


def _class_sweep(g1, b, c, w, thresholds, cell_fn):
    nt = len(thresholds)
    out = np.zeros(nt, dtype=np.float64)
    if len(g1) == 0 or nt == 0:
        return out
    widths = b + c
    alive = widths > 0.0
    if not np.any(alive):
        return out
    _, exps = np.frexp(widths)
    for e in np.unique(exps[alive]):
        sel = (exps == e) & alive
        g1c = g1[sel]
        bc = b[sel]
        cc = c[sel]
        wc = w[sel]
        sc = widths[sel]
        cap = np.ldexp(1.0, int(e))  # every width in this class is < cap
        starts = np.searchsorted(g1c, thresholds - cap, side="right")
        stops = np.searchsorted(g1c, thresholds, side="left")
        for j in range(nt):
            a, z = starts[j], stops[j]
            if a >= z:
                continue
            tau = thresholds[j] - g1c[a:z]
            open_mask = tau < sc[a:z]
            if not np.any(open_mask):
                continue
            out[j] += np.sum(wc[a:z][open_mask]
                             * cell_fn(tau[open_mask],
                                       bc[a:z][open_mask],
                                       cc[a:z][open_mask]))
    return out


def straddle_masses(g1, b, c, w, thresholds):
    return _class_sweep(g1, b, c, w, thresholds, _ramp_fraction)


def straddle_density(g1, b, c, w, thresholds):
    return _class_sweep(g1, b, c, w, thresholds, _ramp_density)
