"""Error metrics and excess-MSE accounting.

Excess MSE measures an estimator's MSE beyond the oracle's (the ML
estimator with perfect dose knowledge); the percent form normalizes by
the baseline estimator's excess, so the baseline itself sits at 100 and
the oracle at 0.
"""

from dataclasses import dataclass

import numpy as np

from .acquisition import YieldImage

__all__ = [
    "EstimatorReport",
    "ReportRow",
    "image_mse",
    "analytic_baseline_mse",
    "excess_mse",
    "excess_percent",
    "pointwise_bias_variance",
    "masked_dose_mse",
    "build_report",
]


def image_mse(estimate: YieldImage, truth: YieldImage):
    """Mean squared per-pixel difference between two images."""
    if estimate.values.shape != truth.values.shape:
        raise ValueError("image dimensions must match")
    diff = estimate.values - truth.values
    return float(np.mean(diff * diff))


def analytic_baseline_mse(eta, lam, epsilon=0.0):
    """Closed-form MSE of the baseline estimator under dose mismatch.

    With the assumed dose off by a factor (1 + epsilon),

        MSE = eta^2 (eps / (1+eps))^2 + eta (1+eta) / (lam (1+eps)^2),

    which reduces to eta(1+eta)/lam at epsilon = 0.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    scale = 1.0 + epsilon
    if scale == 0.0:
        raise ValueError("epsilon = -1 is singular (assumed dose vanishes)")
    bias = eta * epsilon / scale
    return bias * bias + eta * (1.0 + eta) / (lam * scale * scale)


def excess_mse(est_mse, oracle_mse):
    """MSE beyond the oracle's."""
    return est_mse - oracle_mse


def excess_percent(est_excess, baseline_excess):
    """Excess as a percentage of the baseline's excess, clamped at 0."""
    if baseline_excess <= 0:
        raise ValueError("baseline excess must be positive for the percent form")
    return max(0.0, 100.0 * est_excess / baseline_excess)


def pointwise_bias_variance(trials, truth):
    """(bias, sample variance, MSE) of repeated estimates at one pixel.

    MSE is the direct mean of squared errors; it equals
    bias^2 + (T-1)/T * variance identically.
    """
    trials = np.asarray(trials, dtype=float)
    if trials.size < 2:
        raise ValueError("need at least 2 trials")
    err = trials - truth
    bias = float(err.mean())
    variance = float(trials.var(ddof=1))
    mse = float(np.mean(err * err))
    return bias, variance, mse


def masked_dose_mse(estimate, truth_values):
    """Dose-trace MSE over defined pixels.

    NaN entries of the estimate (undefined where the true yield is zero)
    are excluded; returns (mse, excluded_count).
    """
    estimate = np.asarray(estimate, dtype=float).ravel()
    truth_values = np.asarray(truth_values, dtype=float).ravel()
    if estimate.shape != truth_values.shape:
        raise ValueError("trace lengths must match")
    defined = np.isfinite(estimate)
    excluded = int(np.count_nonzero(~defined))
    if excluded == estimate.size:
        raise ValueError("no defined pixels to average")
    diff = estimate[defined] - truth_values[defined]
    return float(np.mean(diff * diff)), excluded


@dataclass(frozen=True)
class ReportRow:
    name: str
    mse_eta: float = None
    excess: float = None
    excess_pct: float = None
    mse_lambda: float = None
    lambda_excluded: int = 0


@dataclass(frozen=True)
class EstimatorReport:
    """Per-estimator MSE and excess-MSE table."""

    rows: tuple

    def row(self, name) -> ReportRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_csv_text(self):
        def cell(v):
            return "" if v is None else repr(v)

        lines = ["name,mse_eta,excess,excess_pct,mse_lambda,lambda_excluded"]
        for r in self.rows:
            lines.append(",".join([r.name, cell(r.mse_eta), cell(r.excess),
                                   cell(r.excess_pct), cell(r.mse_lambda),
                                   str(r.lambda_excluded)]))
        return "\n".join(lines) + "\n"

    def to_table_text(self):
        header = f"{'estimator':<12}{'MSE':>12}{'excess':>12}{'excess %':>10}{'dose MSE':>12}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            def num(v, nd=4):
                return "" if v is None else f"{v:.{nd}f}"
            lines.append(f"{r.name:<12}{num(r.mse_eta):>12}{num(r.excess):>12}"
                         f"{num(r.excess_pct, 1):>10}{num(r.mse_lambda):>12}")
        return "\n".join(lines) + "\n"


def build_report(eta_mses, lambda_mses=None, oracle="oracle",
                 baseline="baseline") -> EstimatorReport:
    """Assemble a report from {name: mse} mappings.

    Excess columns appear when an oracle row is present; percent columns
    additionally need a baseline row with strictly positive excess (a
    zero baseline excess leaves them unset rather than dividing).
    lambda_mses maps name -> (mse, excluded_count).
    """
    lambda_mses = lambda_mses or {}
    oracle_mse = eta_mses.get(oracle)
    baseline_excess = None
    if oracle_mse is not None and baseline in eta_mses:
        baseline_excess = excess_mse(eta_mses[baseline], oracle_mse)

    rows = []
    for name, mse in eta_mses.items():
        exc = pct = None
        if oracle_mse is not None:
            exc = excess_mse(mse, oracle_mse)
            if baseline_excess is not None and baseline_excess > 0:
                pct = excess_percent(exc, baseline_excess)
        lam = lambda_mses.get(name)
        rows.append(ReportRow(name=name, mse_eta=mse, excess=exc, excess_pct=pct,
                              mse_lambda=None if lam is None else lam[0],
                              lambda_excluded=0 if lam is None else lam[1]))
    for name, (lam_mse, excluded) in lambda_mses.items():
        if name not in eta_mses:
            rows.append(ReportRow(name=name, mse_lambda=lam_mse,
                                  lambda_excluded=excluded))
    return EstimatorReport(rows=tuple(rows))
