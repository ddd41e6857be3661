"""Counting statistics for secondary-electron detection.

The total count produced by one (sub-)acquisition is compound Poisson:
the number of incident particles M is Poisson(lam) and each particle
liberates an independent Poisson(eta) burst of secondary electrons, so
the total Y follows a Neyman Type A law with parameters (eta, lam).
Everything downstream (estimators, filters, simulators) builds on the
exact log-PMF, the moments, and the two-stage sampler defined here.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "NeymanParams",
    "neyman_log_pmf",
    "neyman_moments",
    "sample_neyman",
    "sample_poisson",
    "lambert_w0",
]

_INV_E = np.exp(-1.0)


@dataclass(frozen=True)
class NeymanParams:
    """Parameter pair (eta, lam) of the compound counting law.

    eta is the mean secondary-electron yield per incident particle and
    lam the mean number of incident particles per acquisition. Both are
    dimensionless and nonnegative.
    """

    eta: float
    lam: float

    def __post_init__(self):
        eta, lam = self.eta, self.lam
        if not (np.isfinite(eta) and np.isfinite(lam)):
            raise ValueError("NeymanParams fields must be finite")
        if eta < 0 or lam < 0:
            raise ValueError("NeymanParams fields must be nonnegative")


def neyman_log_pmf(y, params: NeymanParams):
    """Log-probability of observing total count y.

    The PMF is

        P(y; eta, lam) = e^-lam * eta^y / y! *
                         sum_m (lam e^-eta)^m m^y / m!

    evaluated here as a log-space sum over m with log-gamma factorials.
    The sum is truncated at m = max(50, lam + 12 sqrt(lam) + y), which
    bounds the neglected tail far below double-precision resolution for
    any admissible parameters.

    Parameters
    ----------
    y : int or array of int
        Nonnegative counts.
    params : NeymanParams

    Returns
    -------
    float or ndarray
        log P(y); -inf where the count is impossible (eta = 0 or
        lam = 0 with y > 0).
    """
    y_arr = np.asarray(y)
    if not np.issubdtype(y_arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(y_arr, 1), 0)):
            raise ValueError("counts must be integers")
        y_arr = y_arr.astype(np.int64)
    if np.any(y_arr < 0):
        raise ValueError("counts must be nonnegative")

    eta, lam = params.eta, params.lam
    scalar = np.isscalar(y) or y_arr.ndim == 0

    if eta == 0.0 or lam == 0.0:
        out = np.where(y_arr == 0, 0.0, -np.inf)
        return float(out) if scalar else out

    flat = y_arr.ravel()
    mmax = int(max(50, lam + 12.0 * np.sqrt(lam) + flat.max()))
    m = np.arange(1, mmax + 1)
    # log of (lam e^-eta)^m / m!; the m = 0 term survives only at y = 0
    base = m * (np.log(lam) - eta) - gammaln(m + 1.0)
    terms = base[:, None] + flat[None, :] * np.log(m)[:, None]
    lse = logsumexp(terms, axis=0)
    zero_sum = logsumexp(np.concatenate(([0.0], base)))
    lse = np.where(flat == 0, zero_sum, lse)

    out = -lam + flat * np.log(eta) - gammaln(flat + 1.0) + lse
    out = out.reshape(y_arr.shape)
    return float(out) if scalar else out


def neyman_moments(params: NeymanParams):
    """Mean and variance of the total count: (lam*eta, lam*eta*(1+eta))."""
    mean = params.lam * params.eta
    return mean, mean * (1.0 + params.eta)


def sample_neyman(params: NeymanParams, rng, size=None):
    """Draw total counts by two-stage sampling.

    M ~ Poisson(lam) incident particles, then Y | M ~ Poisson(M * eta).
    The caller owns the generator, so sampling is reproducible given
    (seed, call sequence).
    """
    m = rng.poisson(params.lam, size)
    return rng.poisson(m * params.eta)


def sample_poisson(mean, rng, size=None):
    """Poisson counts with the given mean (scalar or array).

    Thin wrapper over the generator's sampler, which switches between
    sequential inversion at small means and transformed rejection at
    large ones; sub-acquisition doses (~0.1) live on the small-mean path.
    """
    mean = np.asarray(mean, dtype=float)
    if not np.all(np.isfinite(mean)) or np.any(mean < 0):
        raise ValueError("Poisson mean must be finite and nonnegative")
    return rng.poisson(mean, size)


def lambert_w0(x):
    """Principal branch W0 of the Lambert W function on [-1/e, inf).

    Solves w * e^w = x by Halley iteration from a piecewise seed
    (square-root series near the branch point, log1p in the middle,
    log-based for large arguments), at most 50 iterations, stopping at
    relative updates below 1e-13.

    Parameters
    ----------
    x : float or array
        Arguments >= -1/e (a 1e-12 pad absorbs representation error;
        anything below raises).

    Returns
    -------
    float or ndarray
        w >= -1 with w * e^w = x to ~1e-12 relative.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr < -_INV_E - 1e-12):
        raise ValueError("lambert_w0 requires x >= -1/e")
    x_arr = np.maximum(x_arr, -_INV_E)

    z = 1.0 + np.e * x_arr  # distance past the branch point, scaled
    near_branch = z < 1e-12

    w = np.where(
        x_arr < -0.25,
        -1.0 + np.sqrt(2.0 * np.maximum(z, 0.0)),
        np.where(x_arr <= np.e, np.log1p(np.maximum(x_arr, -0.5)),
                 np.log(np.maximum(x_arr, 2.0))
                 - np.log(np.log(np.maximum(x_arr, 2.0)))),
    )

    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - x_arr
        wp1 = w + 1.0
        # Halley step; wp1 stays >= ~1e-6 because branch-point inputs
        # are handled by the series below
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * np.where(near_branch, 1.0, wp1))
        update = (f != 0.0) & ~near_branch
        dw = np.where(update, f, 0.0) / np.where(update, denom, 1.0)
        w = w - dw
        if np.all(np.abs(dw) <= 1e-13 * (1.0 + np.abs(w))):
            break

    w = np.where(near_branch, -1.0 + np.sqrt(2.0 * np.maximum(z, 0.0)), w)
    return float(w[0]) if scalar else w
