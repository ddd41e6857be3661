"""Simulated secondary-electron acquisition.

Time-resolved sensing splits each pixel's dwell time into n
sub-acquisitions of dose lam_p / n and records the n counts separately;
conventional sensing is the aggregate of those counts. The dose is held
constant within a pixel (the drift process advances per pixel, not per
sub-acquisition).
"""

from dataclasses import dataclass

import numpy as np

from .beam_model import DoseField

__all__ = [
    "YieldImage",
    "TRMeasurement",
    "AggregatedMeasurement",
    "acquire_time_resolved",
    "aggregate",
    "count_histogram",
]


@dataclass(frozen=True)
class YieldImage:
    """2-D grid of per-pixel secondary-electron yield eta.

    Holds ground truth or an estimate. Physical yields are nonnegative;
    estimates produced by linear filtering may carry small negative
    excursions, so only finiteness is enforced here.
    """

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("yield image must be 2-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("yield image must be finite")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def raster(self):
        """Row-major flattened view matching dose-trace ordering."""
        return self.values.ravel()


@dataclass(frozen=True)
class TRMeasurement:
    """Per-pixel vectors of n sub-acquisition counts, raster-ordered rows."""

    counts: np.ndarray  # shape (width*height, n)
    width: int
    height: int

    def __post_init__(self):
        if self.counts.ndim != 2 or self.counts.shape[0] != self.width * self.height:
            raise ValueError("counts must have one length-n row per pixel")
        if not np.issubdtype(self.counts.dtype, np.integer):
            raise ValueError("counts must be integers")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def n(self):
        """Sub-acquisitions per pixel."""
        return self.counts.shape[1]


@dataclass(frozen=True)
class AggregatedMeasurement:
    """Per-pixel total counts Y = sum_k Y_k on the image grid."""

    totals: np.ndarray  # shape (height, width)

    def __post_init__(self):
        if self.totals.ndim != 2:
            raise ValueError("totals must be 2-D")
        if not np.issubdtype(self.totals.dtype, np.integer) or np.any(self.totals < 0):
            raise ValueError("totals must be nonnegative integers")

    @property
    def height(self):
        return self.totals.shape[0]

    @property
    def width(self):
        return self.totals.shape[1]

    def raster(self):
        return self.totals.ravel()


def acquire_time_resolved(truth: YieldImage, dose: DoseField, n, rng) -> TRMeasurement:
    """Simulate time-resolved measurement of a yield image under a dose field.

    At pixel p each of the n counts is an independent compound-Poisson
    draw with parameters (eta_p, lam_p / n): incident particles first,
    then one burst per particle.

    Parameters
    ----------
    truth : YieldImage
    dose : DoseField
        Same dimensions as truth.
    n : int
        Sub-acquisitions per pixel, >= 1.
    rng : numpy Generator
    """
    if (truth.height, truth.width) != (dose.height, dose.width):
        raise ValueError("truth and dose dimensions must match")
    if n < 1:
        raise ValueError("n must be at least 1")
    n_pixels = truth.width * truth.height
    mu = dose.values[:, None] / n
    incident = rng.poisson(np.broadcast_to(mu, (n_pixels, n)))
    counts = rng.poisson(incident * truth.raster()[:, None])
    return TRMeasurement(counts=counts, width=truth.width, height=truth.height)


def aggregate(tr: TRMeasurement) -> AggregatedMeasurement:
    """Sum the n sub-acquisition counts per pixel (conventional sensing)."""
    totals = tr.counts.sum(axis=1).reshape(tr.height, tr.width)
    return AggregatedMeasurement(totals=totals)


def count_histogram(tr: TRMeasurement, pixel):
    """Multiplicity of each count value at one raster-indexed pixel.

    The histogram is a sufficient statistic for the per-pixel
    time-resolved likelihood; multiplicities sum to n.
    """
    if not (0 <= pixel < tr.width * tr.height):
        raise IndexError("pixel index out of range")
    values, counts = np.unique(tr.counts[pixel], return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}
