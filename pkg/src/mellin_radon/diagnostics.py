"""Injectivity verdicts from Mellin zero sets.

The transform with cost q is injective on the weighted L^r space tied to a
plane Re z = c exactly when the zero set of (Me^{-q}) on that plane is small
in the r-graded sense: empty for r = inf, of measure zero for r = 2, nowhere
dense for r = 1. The kernel variant adds the same requirement for (Mh) on
the induced line Re s = c_1 + ... + c_n, and the profit operator inherits
the plain verdict verbatim because its own kernel factor never vanishes.

Two evidence grades keep the claims honest. CES trees have a closed-form
symbol that is a product of Gamma values (see mellin_exp_cost) and never
vanishes, so their verdict is certified analytically; the same holds for the
profit and exponential kernels. Everything else is scanned on a finite
lattice, and a finite scan can neither prove emptiness nor decide whether a
below-threshold set is nowhere dense or null. Scan-based verdicts are
therefore labeled "numerical", and a fat below-threshold region leaves the
r = 1, 2 cases "inconclusive" rather than guessing.

A lattice dip only counts as a zero when local refinement can actually
drive the modulus toward zero. Decaying symbols otherwise produce edge
minima many orders of magnitude below the box median (the recorded
candidate threshold), and those must not read as roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cost import CostExpr, dimension
from .errors import DomainError, ValidationError
from .kernels import ExponentialKernel, ProfitKernel, kernel_mellin
from .mellin import mellin_exp_cost

__all__ = [
    "ZeroScanReport",
    "InjectivityReport",
    "zero_scan",
    "kernel_zero_scan",
    "injectivity_report",
    "modulus_lattice",
]

# candidate admission: modulus below this multiple of the box median
THRESHOLD_RATIO = 1e-3
# ... and below this fraction of the seed cell's own lattice value. A root
# inside the cell lets the zoom drive the modulus down by orders of
# magnitude, while a smooth or decaying minimum barely improves on its seed.
REFINE_IMPROVEMENT = 1e-3
# a lattice point reads as exactly-zero-level when this far below the
# largest modulus among its immediate neighbors
ZERO_MASK_RATIO = 1e-6

_REFINE_LEVELS = 24
_REFINE_POINTS = 9
_SEED_BUDGET = 128
# default lattice size: keep the total point count near 2^17 in any
# dimension, inside [16, 128] per axis
_POINT_BUDGET = 2 ** 17

NO_ZERO = "no-zero-detected"
ISOLATED = "isolated-zeros"
REGION = "zero-region"

_VERDICT_ORDER = ("injective-certified", "injective-numerical",
                  "inconclusive", "not-injective-numerical")


@dataclass
class ZeroScanReport:
    """Modulus survey of a Mellin symbol on one plane Re z = c."""

    c: tuple
    box: tuple
    resolution: int
    threshold: float
    min_modulus: float
    argmin: tuple
    candidates: list = field(default_factory=list)
    classification: str = NO_ZERO
    analytic: bool = False

    def to_dict(self):
        return {
            "c": list(self.c),
            "box": list(self.box),
            "resolution": self.resolution,
            "threshold": self.threshold,
            "min_modulus": self.min_modulus,
            "argmin": list(self.argmin),
            "candidates": [
                {"point": list(p), "modulus": m} for p, m in self.candidates
            ],
            "classification": self.classification,
            "analytic": self.analytic,
        }


@dataclass
class InjectivityReport:
    """Verdict for one operator kind on one plane, at one integrability
    grade r."""

    operator: str
    r: float
    c: tuple
    verdict: str
    scan: ZeroScanReport
    kernel_scan: ZeroScanReport | None = None

    def to_dict(self):
        return {
            "operator": self.operator,
            "r": "inf" if math.isinf(self.r) else int(self.r),
            "c": list(self.c),
            "verdict": self.verdict,
            "scan": self.scan.to_dict(),
            "kernel_scan":
                None if self.kernel_scan is None else self.kernel_scan.to_dict(),
        }


def _freq_axes(box: tuple, resolution: int) -> list:
    return [np.linspace(-b, b, resolution) for b in box]


def _stack_plane(c: tuple, axes: list) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([ci + 1j * m for ci, m in zip(c, mesh)], axis=-1)


def modulus_lattice(symbol, c: tuple, box: tuple, resolution: int):
    """Frequency axes and |symbol| over the scan lattice on Re z = c.

    symbol maps a stacked (..., n) array of complex z to complex values.
    Exposed so front ends can dump the same heatmap the scan saw.
    """
    axes = _freq_axes(box, resolution)
    return axes, np.abs(symbol(_stack_plane(c, axes)))


def _local_minima(mod: np.ndarray) -> np.ndarray:
    """Mask of lattice points not exceeded by any axis neighbor."""
    ok = np.ones(mod.shape, dtype=bool)
    for ax in range(mod.ndim):
        lo = [slice(None)] * mod.ndim
        hi = [slice(None)] * mod.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        ok[lo] &= mod[lo] <= mod[hi]
        ok[hi] &= mod[hi] <= mod[lo]
    return ok


def _neighborhood_scale(mod: np.ndarray, idx: tuple) -> float:
    sel = tuple(slice(max(i - 1, 0), min(i + 2, n))
                for i, n in zip(idx, mod.shape))
    return float(mod[sel].max())


def _neighbor_max(mod: np.ndarray) -> np.ndarray:
    """Largest modulus within one cell in every direction (separable)."""
    out = mod.copy()
    for ax in range(mod.ndim):
        shifted = np.swapaxes(out, 0, ax)
        grown = shifted.copy()
        grown[1:] = np.maximum(grown[1:], shifted[:-1])
        grown[:-1] = np.maximum(grown[:-1], shifted[1:])
        out = np.swapaxes(grown, 0, ax)
    return out


def _refine(symbol, c: tuple, point: np.ndarray, halfwidth: np.ndarray):
    """Zoom the lattice around a seed minimum until the cell collapses.

    Each level evaluates a small sub-lattice and recenters on its argmin;
    the width shrinks geometrically but slowly enough that a root inside
    the starting cell stays inside. Returns the final point and modulus.
    """
    point = point.astype(float).copy()
    halfwidth = halfwidth.astype(float).copy()
    best = math.inf
    for _ in range(_REFINE_LEVELS):
        axes = [np.linspace(p - w, p + w, _REFINE_POINTS)
                for p, w in zip(point, halfwidth)]
        mod = np.abs(symbol(_stack_plane(c, axes)))
        flat = int(np.argmin(mod))
        idx = np.unravel_index(flat, mod.shape)
        point = np.array([ax[i] for ax, i in zip(axes, idx)])
        best = float(mod[idx])
        halfwidth /= 3.0
    return point, best


def _mask_components(mask: np.ndarray):
    """Connected components (axis adjacency) as lists of index tuples."""
    todo = {tuple(ix) for ix in np.argwhere(mask)}
    comps = []
    while todo:
        stack = [todo.pop()]
        comp = []
        while stack:
            at = stack.pop()
            comp.append(at)
            for ax in range(mask.ndim):
                for step in (-1, 1):
                    nb = at[:ax] + (at[ax] + step,) + at[ax + 1:]
                    if nb in todo:
                        todo.remove(nb)
                        stack.append(nb)
        comps.append(comp)
    return comps


def _component_is_fat(comp: list) -> bool:
    pts = np.array(comp)
    extent = pts.max(axis=0) - pts.min(axis=0) + 1
    return bool(np.all(extent >= 3))


def _scan(symbol, c: tuple, box: tuple, resolution: int,
          analytic: bool) -> ZeroScanReport:
    axes, mod = modulus_lattice(symbol, c, box, resolution)
    threshold = THRESHOLD_RATIO * float(np.median(mod))
    flat = int(np.argmin(mod))
    amin = np.unravel_index(flat, mod.shape)
    argmin = tuple(float(ax[i]) for ax, i in zip(axes, amin))
    spacing = np.array([ax[1] - ax[0] for ax in axes])

    if analytic:
        # the closed form certifies nonvanishing, so any refinable lattice
        # dip would be an artifact of steep decay; report the survey only
        return ZeroScanReport(
            c=tuple(float(ci) for ci in c),
            box=tuple(float(b) for b in box),
            resolution=int(resolution),
            threshold=threshold,
            min_modulus=float(mod[amin]),
            argmin=argmin,
            candidates=[],
            classification=NO_ZERO,
            analytic=True,
        )

    # every lattice local minimum is a possible root cell; refine the
    # deepest relative dips first and keep the budget bounded
    seeds = []
    for idx in map(tuple, np.argwhere(_local_minima(mod))):
        scale = _neighborhood_scale(mod, idx)
        depth = mod[idx] / scale if scale > 0.0 else 0.0
        seeds.append((depth, idx))
    seeds.sort(key=lambda item: item[0])

    candidates = []
    for _, idx in seeds[:_SEED_BUDGET]:
        seed = np.array([ax[i] for ax, i in zip(axes, idx)])
        point, value = _refine(symbol, c, seed, spacing.copy())
        if value <= threshold and value <= REFINE_IMPROVEMENT * mod[idx]:
            candidates.append((tuple(float(v) for v in point), value))

    # merge refinements that converged into the same cell
    candidates.sort(key=lambda cand: cand[1])
    kept = []
    for point, value in candidates:
        if any(np.all(np.abs(np.array(point) - np.array(p)) <= spacing)
               for p, _ in kept):
            continue
        kept.append((point, value))

    # exact-zero evidence on the lattice itself, judged against immediate
    # neighbors so that global decay cannot pollute the mask; a component
    # that is several cells across in every direction is a genuine region
    zero_mask = mod <= ZERO_MASK_RATIO * _neighbor_max(mod)
    if any(_component_is_fat(comp) for comp in _mask_components(zero_mask)):
        classification = REGION
    elif kept or zero_mask.any():
        classification = ISOLATED
    else:
        classification = NO_ZERO

    return ZeroScanReport(
        c=tuple(float(ci) for ci in c),
        box=tuple(float(b) for b in box),
        resolution=int(resolution),
        threshold=threshold,
        min_modulus=float(mod[amin]),
        argmin=argmin,
        candidates=kept,
        classification=classification,
        analytic=analytic,
    )


def _check_plane(c, n: int) -> tuple:
    c = tuple(float(ci) for ci in np.atleast_1d(np.asarray(c, dtype=float)))
    if len(c) == 1 and n > 1:
        c = c * n
    if len(c) != n:
        raise ValidationError(f"plane has {len(c)} components for {n} axes")
    if any(ci <= 0.0 for ci in c):
        raise DomainError(f"plane components must be positive, got {c}")
    return c


def _check_box(box, n: int) -> tuple:
    box = tuple(float(b) for b in np.atleast_1d(np.asarray(box, dtype=float)))
    if len(box) == 1 and n > 1:
        box = box * n
    if len(box) != n:
        raise ValidationError(f"box has {len(box)} radii for {n} axes")
    if any(b <= 0.0 for b in box):
        raise DomainError(f"box radii must be positive, got {box}")
    return box


def _check_resolution(resolution) -> int:
    resolution = int(resolution)
    if resolution < 16:
        raise ValidationError(
            f"resolution must be at least 16 per axis, got {resolution}")
    return resolution


def zero_scan(q: CostExpr, c, box=None, resolution: int | None = None,
              symbol=None) -> ZeroScanReport:
    """Survey |Me^{-q}| on the plane Re z = c over the frequency box.

    For cost trees the symbol is the closed-form Gamma product, which never
    vanishes, so the report carries analytic=True and the scan serves as a
    conditioning survey (min_modulus bounds the inversion's worst division).
    Passing symbol, a callable on stacked (..., n) arrays of z, replaces the
    closed form and drops the analytic certificate; this is how externally
    supplied or manufactured symbols get classified.

    Defaults keep the lattice near 2^17 points: radius 20 and 128 points
    per axis on the plane of a two-input cost, shrinking for higher
    dimensions so a scan never dominates a diagnostics run.
    """
    n = dimension(q)
    c = _check_plane(c, n)
    if box is None:
        box = 20.0 if n <= 2 else 8.0
    box = _check_box(box, n)
    if resolution is None:
        resolution = min(128, max(16, int(round(_POINT_BUDGET ** (1.0 / n)))))
    resolution = _check_resolution(resolution)
    analytic = symbol is None
    if symbol is None:
        symbol = lambda z: mellin_exp_cost(q, z)
    return _scan(symbol, c, box, resolution, analytic)


def kernel_zero_scan(h, alpha: float, box=8.0,
                     resolution: int = 256) -> ZeroScanReport:
    """Survey |Mh| on the line Re s = alpha (a 1-D scan).

    The profit and exponential kernels are certified analytically: the
    first has modulus p0^(alpha+1) / (|s| |s+1|) and the second is a Gamma
    value, neither of which vanishes for alpha > 0. Sampled kernels are
    classified from the scan alone.
    """
    alpha = float(alpha)
    if alpha <= 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    box = _check_box(box, 1)
    resolution = _check_resolution(resolution)
    analytic = isinstance(h, (ProfitKernel, ExponentialKernel))
    symbol = lambda z: kernel_mellin(h, z[..., 0])
    return _scan(symbol, (alpha,), box, resolution, analytic)


def _graded_verdict(scan: ZeroScanReport, r: float) -> str:
    if scan.analytic:
        return "injective-certified"
    if scan.classification == NO_ZERO:
        return "injective-numerical"
    if scan.classification == ISOLATED:
        # isolated points are nowhere dense and null; only emptiness fails
        return ("not-injective-numerical" if math.isinf(r)
                else "injective-numerical")
    if math.isinf(r):
        return "not-injective-numerical"
    # a fat below-threshold region: the scan cannot tell a thickened curve
    # from a genuine continuum, so the graded cases stay open
    return "inconclusive"


def _combine(verdicts) -> str:
    return max(verdicts, key=_VERDICT_ORDER.index)


def _check_r(r) -> float:
    if isinstance(r, str):
        if r not in ("inf", "infinity"):
            raise ValidationError(f"r must be 1, 2, or inf, got {r!r}")
        return math.inf
    r = float(r)
    if r not in (1.0, 2.0) and not math.isinf(r):
        raise ValidationError(f"r must be 1, 2, or inf, got {r}")
    return r


def injectivity_report(kind: str, q: CostExpr, c, r, h=None,
                       box=None, resolution: int | None = None,
                       kernel_box=8.0,
                       kernel_resolution: int = 256) -> InjectivityReport:
    """Combined verdict for one operator on the plane Re z = c.

    kind is "radon", "profit", or "kernel". The profit verdict always equals
    the radon verdict: the two operators are injective on exactly the same
    spaces, and the profit kernel factor is certified zero free. The kernel
    operator additionally needs (Mh) to stay away from zero on the line
    Re s = c_1 + ... + c_n, so h is required there (and rejected elsewhere,
    where it could only mislead).
    """
    if kind not in ("radon", "profit", "kernel"):
        raise ValidationError(
            f"kind must be one of radon, profit, kernel; got {kind!r}")
    if (h is not None) != (kind == "kernel"):
        raise ValidationError(
            "a kernel h is required for kind='kernel' and meaningless "
            "otherwise")
    r = _check_r(r)
    n = dimension(q)
    c = _check_plane(c, n)
    scan = zero_scan(q, c, box=box, resolution=resolution)
    verdict = _graded_verdict(scan, r)
    kscan = None
    if kind == "kernel":
        kscan = kernel_zero_scan(h, sum(c), box=kernel_box,
                                 resolution=kernel_resolution)
        verdict = _combine([verdict, _graded_verdict(kscan, r)])
    return InjectivityReport(operator=kind, r=r, c=c, verdict=verdict,
                             scan=scan, kernel_scan=kscan)
