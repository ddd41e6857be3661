"""Per-pixel yield estimators and the reference dose estimator.

Four eta estimators of increasing use of the data: the baseline divides
the aggregate count by an assumed dose; the quotient mode (QM) divides
the summed time-resolved counts by the number of nonzero
sub-acquisitions; LQM removes QM's multi-incidence bias through the
Lambert W function; TRML grid-searches the exact time-resolved
likelihood. The oracle is TRML fed the true per-pixel dose, and
lambda_reference inverts the measurement with the true yield.
"""

from dataclasses import dataclass

import numpy as np

from ._trml import grid_search_mle
from .acquisition import AggregatedMeasurement, TRMeasurement, YieldImage
from .beam_model import DoseField
from .distributions import lambert_w0

__all__ = [
    "EtaGrid",
    "baseline_eta",
    "qm_eta",
    "lqm_eta",
    "trml_eta",
    "oracle_eta",
    "lambda_reference",
]


@dataclass(frozen=True)
class EtaGrid:
    """Yield search grid for the ML estimators: [lo, hi] in steps of step."""

    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError("grid minimum must be nonnegative")
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if self.hi <= self.lo:
            raise ValueError("grid maximum must exceed the minimum")

    def points(self):
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(count)

    @classmethod
    def from_measurement(cls, tr: TRMeasurement, floor=10.0, step=0.01):
        """Data-driven grid: [0, max(floor, 4 * 99th percentile of QM)].

        floor should be ~10 when yields span several units and ~2 when
        they stay below 1, keeping the search bounded either way.
        """
        q99 = float(np.percentile(qm_eta(tr).values, 99))
        hi = max(floor, 4.0 * q99)
        hi = np.ceil(hi / step) * step
        return cls(lo=0.0, hi=float(hi), step=step)


def _dose_raster(lambda_assumed, n_pixels):
    """Normalize an assumed dose (scalar, array, or DoseField) to (P,)."""
    if isinstance(lambda_assumed, DoseField):
        values = lambda_assumed.values
    else:
        values = np.asarray(lambda_assumed, dtype=float)
    if values.ndim == 0:
        values = np.full(n_pixels, float(values))
    else:
        values = values.ravel()
        if values.shape != (n_pixels,):
            raise ValueError("assumed dose must be scalar or one value per pixel")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("assumed dose must be positive and finite")
    return values


def baseline_eta(agg: AggregatedMeasurement, lambda_assumed) -> YieldImage:
    """Aggregate count divided by the assumed dose: eta = Y / lam."""
    n_pixels = agg.width * agg.height
    lam = _dose_raster(lambda_assumed, n_pixels)
    values = agg.raster() / lam
    return YieldImage(values.reshape(agg.height, agg.width))


def qm_eta(tr: TRMeasurement) -> YieldImage:
    """Quotient mode: summed counts over nonzero sub-acquisitions.

    An all-zero pixel is 0/0 and maps to 0 ("no evidence of yield",
    matching LQM's limit). Never reads the dose.
    """
    sums = tr.counts.sum(axis=1)
    nonzero = np.count_nonzero(tr.counts, axis=1)
    values = np.where(nonzero > 0, sums / np.maximum(nonzero, 1), 0.0)
    return YieldImage(values.reshape(tr.height, tr.width))


def lqm_eta(tr: TRMeasurement) -> YieldImage:
    """Lambert quotient mode: eta = W0(-q e^-q) + q with q the QM value.

    For q <= 1 the correction cancels q exactly; tiny negative floating
    residue of that cancellation is clamped to 0.
    """
    q = qm_eta(tr).values.ravel()
    values = lambert_w0(-q * np.exp(-q)) + q
    values = np.maximum(values, 0.0)
    return YieldImage(values.reshape(tr.height, tr.width))


def trml_eta(tr: TRMeasurement, lambda_assumed, grid: EtaGrid) -> YieldImage:
    """Time-resolved ML: per-pixel grid argmax of the joint likelihood.

    Each pixel maximizes sum_k log P(y_k; eta, lam_p / n) over the grid,
    with the assumed dose given as a scalar or per pixel (the same code
    path, so constant fields and scalars agree bit for bit). Ties break
    toward smaller eta; an all-zero pixel returns the grid minimum.
    """
    n_pixels = tr.width * tr.height
    lam = _dose_raster(lambda_assumed, n_pixels)
    mu = lam / tr.n
    values = grid_search_mle(tr.counts, mu, grid.points())
    return YieldImage(values.reshape(tr.height, tr.width))


def oracle_eta(tr: TRMeasurement, dose_true: DoseField, grid: EtaGrid) -> YieldImage:
    """TRML with perfect knowledge of the per-pixel dose.

    Unattainable in practice; defines the zero point of excess MSE.
    """
    return trml_eta(tr, dose_true, grid)


def lambda_reference(agg: AggregatedMeasurement, truth: YieldImage):
    """Reference dose estimate lam = Y / eta using the true yield.

    Returns a raster-ordered array; pixels where the true yield is zero
    are undefined and flagged NaN so error metrics can exclude them.
    """
    if (truth.height, truth.width) != (agg.height, agg.width):
        raise ValueError("truth and measurement dimensions must match")
    eta = truth.raster()
    totals = agg.raster()
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(eta > 0, totals / np.where(eta > 0, eta, 1.0), np.nan)
    return values
