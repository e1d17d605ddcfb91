"""Complex gamma function via the Lanczos approximation.

Self-contained so the closed-form transform formulas do not pull in a
second numerics stack, and so the self-test harness can deliberately
perturb the coefficients below and watch the identity suite fail.

Accuracy: ~13 significant digits on the half-plane Re z >= 0.5, carried
to the rest of the plane by reflection / recurrence.
"""

from __future__ import annotations

import numpy as np

from .errors import GammaPoleError

__all__ = ["complex_gamma", "complex_loggamma"]

# Lanczos parameter g = 607/128 with the matching 15-term coefficient set.
# Module-level on purpose: the self-test fault-injection hook perturbs one
# entry to prove the identity checks are sensitive to a broken gamma.
LANCZOS_G = 607.0 / 128.0
LANCZOS_COEFFS = np.array(
    [
        0.99999999999999709182,
        57.156235665862923517,
        -59.597960355475491248,
        14.136097974741747174,
        -0.49191381609762019978,
        0.33994649984811888699e-4,
        0.46523628927048575665e-4,
        -0.98374475304879564677e-4,
        0.15808870322491248884e-3,
        -0.21026444172410488319e-3,
        0.21743961811521264320e-3,
        -0.16431810653676389022e-3,
        0.84418223983852743293e-4,
        -0.26190838401581408670e-4,
        0.36899182659531622704e-5,
    ]
)

_HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)


def _is_nonpositive_integer(z: np.ndarray) -> np.ndarray:
    real_integer = (z.imag == 0.0) & (z.real == np.floor(z.real))
    return real_integer & (z.real <= 0.0)


def _lanczos_series(zm1: np.ndarray) -> np.ndarray:
    # zm1 = z - 1 with Re z >= 0.5; series is a sum of simple poles left of that.
    acc = np.full(zm1.shape, LANCZOS_COEFFS[0], dtype=np.complex128)
    for k in range(1, LANCZOS_COEFFS.shape[0]):
        acc = acc + LANCZOS_COEFFS[k] / (zm1 + k)
    return acc


def _loggamma_right(z: np.ndarray) -> np.ndarray:
    zm1 = z - 1.0
    t = zm1 + LANCZOS_G + 0.5
    return _HALF_LOG_TWO_PI + (zm1 + 0.5) * np.log(t) - t + np.log(_lanczos_series(zm1))


def complex_loggamma(z):
    """Principal branch of log Gamma, vectorized over complex arrays.

    Left of Re z = 0.5 the value is continued with the recurrence
    log Gamma(z) = log Gamma(z+1) - Log z, which reproduces the standard
    branch (cut along the negative real axis). Poles raise GammaPoleError.
    """
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    if np.any(_is_nonpositive_integer(z)):
        raise GammaPoleError("log-gamma pole at a non-positive integer argument")

    shift = np.zeros(z.shape, dtype=np.complex128)
    left = z.real < 0.5
    # Bounded loop: each pass moves the remaining points one unit right.
    while np.any(left):
        shift[left] += np.log(z[left])
        z[left] += 1.0
        left = z.real < 0.5

    out = _loggamma_right(z) - shift
    return out[0] if scalar else out.reshape(np.shape(out))


def complex_gamma(z):
    """Gamma(z) for complex scalar or array arguments.

    Reflection handles Re z < 0.5; non-positive integers raise
    GammaPoleError rather than returning inf.
    """
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(_is_nonpositive_integer(z)):
        raise GammaPoleError("gamma pole at a non-positive integer argument")

    out = np.empty(z.shape, dtype=np.complex128)
    left = z.real < 0.5
    right = ~left
    if np.any(right):
        out[right] = np.exp(_loggamma_right(z[right]))
    if np.any(left):
        zl = z[left]
        # Gamma(z) Gamma(1-z) = pi / sin(pi z)
        out[left] = np.pi / (np.sin(np.pi * zl) * np.exp(_loggamma_right(1.0 - zl)))
    return out[0] if scalar else out
