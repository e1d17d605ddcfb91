# cython: language_level=3
"""Compiled hot loops: multi-threshold sublevel straddle masses and density.

For each threshold t (ascending), accumulates w_k * frac_k(t) over the cells
whose linear-model range [g1_k, g1_k + b_k + c_k] straddles t, where frac is
the area fraction of a rectangle cell below a linear level. Cells are opened
as t passes g1_k (inputs sorted ascending by g1) and retired once fully
submerged, so the whole sweep is one pass with a compact active list.

straddle_density runs the same sweep but accumulates w_k * frac_k'(t), the
exact t-derivative of the cell model. Submerged and unopened cells contribute
zero, so no companion prefix over full cells is needed.
"""

import numpy as np

cimport cython
from libc.stdlib cimport free, malloc


@cython.boundscheck(False)
@cython.wraparound(False)
def straddle_masses(double[::1] g1, double[::1] b, double[::1] c,
                    double[::1] w, double[::1] thresholds):
    cdef Py_ssize_t nb = g1.shape[0]
    cdef Py_ssize_t nt = thresholds.shape[0]
    out_arr = np.zeros(nt, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nb == 0 or nt == 0:
        return out_arr
    cdef Py_ssize_t* active = <Py_ssize_t*>malloc(nb * sizeof(Py_ssize_t))
    if active == NULL:
        raise MemoryError()
    cdef Py_ssize_t na = 0, ptr = 0, i, k, j
    cdef double tv, acc, tau, lo, hi, S, gm
    with nogil:
        for j in range(nt):
            tv = thresholds[j]
            while ptr < nb and g1[ptr] < tv:
                if g1[ptr] + b[ptr] + c[ptr] > tv:
                    active[na] = ptr
                    na += 1
                ptr += 1
            acc = 0.0
            i = 0
            while i < na:
                k = active[i]
                S = b[k] + c[k]
                gm = g1[k] + S
                if gm <= tv:
                    # fully submerged for this and every later threshold
                    na -= 1
                    active[i] = active[na]
                    continue
                tau = tv - g1[k]
                if tau > 0.0:
                    if b[k] < c[k]:
                        lo = b[k]
                        hi = c[k]
                    else:
                        lo = c[k]
                        hi = b[k]
                    if lo <= 1e-12 * hi:
                        acc += w[k] * (tau / hi if tau < hi else 1.0)
                    elif tau <= lo:
                        acc += w[k] * (tau * tau / (2.0 * lo * hi))
                    elif tau <= hi:
                        acc += w[k] * ((tau - 0.5 * lo) / hi)
                    else:
                        acc += w[k] * (1.0 - (S - tau) * (S - tau) / (2.0 * lo * hi))
                i += 1
            out[j] = acc
    free(active)
    return out_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def straddle_density(double[::1] g1, double[::1] b, double[::1] c,
                     double[::1] w, double[::1] thresholds):
    cdef Py_ssize_t nb = g1.shape[0]
    cdef Py_ssize_t nt = thresholds.shape[0]
    out_arr = np.zeros(nt, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nb == 0 or nt == 0:
        return out_arr
    cdef Py_ssize_t* active = <Py_ssize_t*>malloc(nb * sizeof(Py_ssize_t))
    if active == NULL:
        raise MemoryError()
    cdef Py_ssize_t na = 0, ptr = 0, i, k, j
    cdef double tv, acc, tau, lo, hi, S, gm
    with nogil:
        for j in range(nt):
            tv = thresholds[j]
            while ptr < nb and g1[ptr] < tv:
                if g1[ptr] + b[ptr] + c[ptr] > tv:
                    active[na] = ptr
                    na += 1
                ptr += 1
            acc = 0.0
            i = 0
            while i < na:
                k = active[i]
                S = b[k] + c[k]
                gm = g1[k] + S
                if gm <= tv:
                    na -= 1
                    active[i] = active[na]
                    continue
                tau = tv - g1[k]
                if tau > 0.0:
                    if b[k] < c[k]:
                        lo = b[k]
                        hi = c[k]
                    else:
                        lo = c[k]
                        hi = b[k]
                    if lo <= 1e-12 * hi:
                        if tau < hi:
                            acc += w[k] / hi
                    elif tau <= lo:
                        acc += w[k] * (tau / (lo * hi))
                    elif tau <= hi:
                        acc += w[k] / hi
                    else:
                        acc += w[k] * ((S - tau) / (lo * hi))
                i += 1
            out[j] = acc
    free(active)
    return out_arr
