"""First-order autoregressive model of beam-current drift.

The incident dose at raster-ordered pixel p evolves as

    lam_p = x_p + a * lam_{p-1} + c,     x_p ~ N(0, sigma_x^2),

so slow drift (a near 1) turns into horizontal stripes in anything
reconstructed under a wrong constant dose. The drift constant is tied to
the nominal dose by c = lambda_nominal * (1 - a), which fixes the
stationary mean at lambda_nominal and the stationary variance at
sigma_x^2 / (1 - a^2).
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, lfiltic

__all__ = [
    "ARParams",
    "DoseField",
    "ar_params_from_spec",
    "generate_dose_field",
    "prior_step_moments",
]

# Gaussian drift admits nonpositive doses; everything downstream needs
# lam > 0, so generated fields are clamped at this fraction of nominal.
CLAMP_FRACTION = 0.01


@dataclass(frozen=True)
class ARParams:
    """AR(1) dose-process parameters (a, c, sigma_x_sq, lambda_nominal)."""

    a: float
    c: float
    sigma_x_sq: float
    lambda_nominal: float

    def __post_init__(self):
        if not (0.0 <= self.a < 1.0):
            raise ValueError("correlation coefficient a must be in [0, 1)")
        if self.sigma_x_sq < 0 or not np.isfinite(self.sigma_x_sq):
            raise ValueError("sigma_x_sq must be finite and nonnegative")
        if self.lambda_nominal <= 0 or not np.isfinite(self.lambda_nominal):
            raise ValueError("lambda_nominal must be positive")
        target = self.lambda_nominal * (1.0 - self.a)
        if abs(self.c - target) > 1e-12 * max(1.0, abs(target)):
            raise ValueError(
                "c must equal lambda_nominal * (1 - a); "
                f"got c={self.c!r}, expected {target!r}"
            )

    @property
    def stationary_variance(self):
        return self.sigma_x_sq / (1.0 - self.a * self.a)

    @property
    def stationary_std(self):
        return float(np.sqrt(self.stationary_variance))


@dataclass(frozen=True)
class DoseField:
    """Per-pixel dose in raster (row-major) order plus its generator params."""

    values: np.ndarray
    params: ARParams
    width: int
    height: int

    def __post_init__(self):
        if self.values.shape != (self.width * self.height,):
            raise ValueError("dose values must be raster-ordered, width*height long")
        if np.any(self.values <= 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("dose values must be positive and finite")

    def grid(self):
        """The field reshaped to (height, width)."""
        return self.values.reshape(self.height, self.width)


def ar_params_from_spec(lambda_nominal, cv, a) -> ARParams:
    """Build ARParams from (nominal dose, coefficient of variation, a).

    cv is the stationary std relative to the nominal dose, so the
    innovation variance is (cv * lambda_nominal)^2 * (1 - a^2).
    """
    if lambda_nominal <= 0:
        raise ValueError("lambda_nominal must be positive")
    if cv < 0:
        raise ValueError("cv must be nonnegative")
    if not (0.0 <= a < 1.0):
        raise ValueError("a must be in [0, 1); the process is stationary only there")
    sigma_lam = cv * lambda_nominal
    return ARParams(
        a=a,
        c=lambda_nominal * (1.0 - a),
        sigma_x_sq=sigma_lam * sigma_lam * (1.0 - a * a),
        lambda_nominal=lambda_nominal,
    )


def generate_dose_field(params: ARParams, width, height, rng) -> DoseField:
    """Sample a dose trace over width*height raster-ordered pixels.

    The first pixel is drawn from the stationary law
    N(lambda_nominal, sigma_x^2 / (1 - a^2)) so the trace has no
    transient; subsequent pixels follow the recursion. Values are
    clamped below at CLAMP_FRACTION * lambda_nominal.
    """
    if width < 1 or height < 1:
        raise ValueError("field dimensions must be at least 1x1")
    n_pixels = width * height
    lam_nom = params.lambda_nominal

    if params.sigma_x_sq == 0.0:
        values = np.full(n_pixels, lam_nom)
    else:
        lam0 = rng.normal(lam_nom, params.stationary_std)
        x = rng.normal(0.0, np.sqrt(params.sigma_x_sq), n_pixels - 1)
        zi = lfiltic([1.0], [1.0, -params.a], [lam0])
        rest, _ = lfilter([1.0], [1.0, -params.a], x + params.c, zi=zi)
        values = np.concatenate(([lam0], rest))

    values = np.maximum(values, CLAMP_FRACTION * lam_nom)
    return DoseField(values=values, params=params, width=width, height=height)


def prior_step_moments(prev_lambda_hat, params: ARParams):
    """One-step-ahead prior moments given the previous dose estimate.

    Returns (a * prev + c, sigma_x_sq): the conditional mean of the next
    dose and the innovation's variance contribution. Shared by the
    sequential filter and its parameter selection.
    """
    return params.a * prev_lambda_hat + params.c, params.sigma_x_sq
