"""Command-line experiment driver.

Subcommands map one-to-one onto experiment stages: `simulate` writes a
dataset (truth, dose trace, time-resolved counts), `estimate` runs a
configured estimator list over an existing dataset, `sweep-epsilon` and
`sweep-dose` run single-pixel Monte Carlo sweeps, `table` regenerates
the ML error-variance lookup, and `wrong-a` reruns the alternating
estimator with a deliberately wrong autocorrelation.

Every command is a pure function of (config, seed): artifacts carry no
timestamps, floats are written with repr, JSON keys are sorted, and the
single Generator per command is drawn from in one documented order, so
repeat runs are byte-identical. Exit codes: 0 ok, 2 bad config, 3
missing artifact.
"""

import argparse
import os
import sys

import numpy as np

from .acquisition import YieldImage, acquire_time_resolved, aggregate
from .alternating import AlternatingConfig, run_alternating
from .beam_model import ARParams, ar_params_from_spec, generate_dose_field
from .config import ConfigError, load_config
from .dft_nulling import ft_nulling, tune_nulling
from .distributions import NeymanParams, sample_neyman
from .estimators import (EtaGrid, baseline_eta, lambda_reference, lqm_eta,
                         qm_eta, trml_eta)
from .gridio import (load_dose_csv, load_image_csv, load_manifest,
                     load_mse_table, load_tr_csv, save_dose_csv,
                     save_image_csv, save_manifest, save_mse_table, save_pgm,
                     save_tr_csv, save_trace_csv)
from .metrics import build_report, image_mse, masked_dose_mse
from .sequential_filter import build_mse_table

__all__ = ["main"]


class MissingArtifactError(RuntimeError):
    """An input artifact the command needs is not on disk."""


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        out = args.out if args.out is not None else cfg.out
        if out is None:
            raise ConfigError("out: set it in the config or pass --out")
        if args.threads is not None:
            _set_threads(args.threads)
        _ensure_out(out)

        if args.command == "simulate":
            cmd_simulate(cfg, out, seed)
        elif args.command == "estimate":
            cmd_estimate(cfg, out)
        elif args.command == "sweep-epsilon":
            cmd_sweep_epsilon(cfg, out, seed)
        elif args.command == "sweep-dose":
            cmd_sweep_dose(cfg, out, seed)
        elif args.command == "table":
            cmd_table(cfg, out, seed)
        else:
            cmd_wrong_a(cfg, out, args.assumed_a)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except MissingArtifactError as err:
        print(f"missing artifact: {err}", file=sys.stderr)
        return 3
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="beamdrift",
        description="Simulation and estimation driver for particle-beam "
                    "imaging under drifting dose.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("simulate", "synthesize truth, dose trace, and counts"),
            ("estimate", "run estimators over an existing dataset"),
            ("sweep-epsilon", "single-pixel MSE sweep over dose mismatch"),
            ("sweep-dose", "single-pixel MSE sweep over total dose"),
            ("table", "regenerate the ML error-variance lookup table"),
            ("wrong-a", "alternating estimation with a wrong autocorrelation")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output dir")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for the ML grid search")
        if name == "wrong-a":
            p.add_argument("--assumed-a", type=float, required=True,
                           help="autocorrelation assumed by the estimator")
    return parser


def _set_threads(threads):
    if threads < 1:
        raise ConfigError("--threads: must be >= 1")
    try:
        import numba
    except ImportError:
        return
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


def _ensure_out(out):
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"out: cannot create {out!r}: {err}") from None


def _artifact(out, name):
    path = os.path.join(out, name)
    if not os.path.exists(path):
        raise MissingArtifactError(f"{path} (run the simulate command first)")
    return path


def cmd_simulate(cfg, out, seed):
    """Write truth.csv/.pgm, dose.csv, tr.csv, manifest.json.

    Draw order from the single Generator: truth texture (blobs only),
    then the dose trace, then the counts.
    """
    cfg.require("truth", "ar", "n")
    rng = np.random.default_rng(seed)
    truth = _load_truth(cfg.truth, rng)
    ar = ar_params_from_spec(cfg.ar.lambda_nominal, cfg.ar.cv, cfg.ar.a)
    dose = generate_dose_field(ar, truth.width, truth.height, rng)
    tr = acquire_time_resolved(truth, dose, cfg.n, rng)

    save_image_csv(os.path.join(out, "truth.csv"), truth)
    save_pgm(os.path.join(out, "truth.pgm"), truth.values)
    save_dose_csv(os.path.join(out, "dose.csv"), dose)
    save_tr_csv(os.path.join(out, "tr.csv"), tr)
    save_manifest(os.path.join(out, "manifest.json"), {
        "command": "simulate",
        "seed": seed,
        "width": truth.width,
        "height": truth.height,
        "n": cfg.n,
        "ar": {"lambda_nominal": ar.lambda_nominal, "cv": cfg.ar.cv,
               "a": ar.a, "c": ar.c, "sigma_x_sq": ar.sigma_x_sq},
        "truth": {"kind": cfg.truth.kind, "eta_min": cfg.truth.eta_min,
                  "eta_max": cfg.truth.eta_max},
    })


def _load_truth(spec, rng):
    if spec.kind == "image":
        if not os.path.exists(spec.path):
            raise ConfigError(f"truth.path: {spec.path!r} does not exist")
        raw = load_image_csv(spec.path).values
        lo, hi = raw.min(), raw.max()
        unit = (raw - lo) / (hi - lo) if hi > lo else np.full(raw.shape, 0.5)
        values = spec.eta_min + (spec.eta_max - spec.eta_min) * unit
        return YieldImage(values)
    from .synthetic import make_truth
    return make_truth(spec.kind, spec.width, spec.height,
                      spec.eta_min, spec.eta_max, rng)


def _load_dataset(out):
    manifest = load_manifest(_artifact(out, "manifest.json"))
    truth = load_image_csv(_artifact(out, "truth.csv"))
    dose = load_dose_csv(_artifact(out, "dose.csv"))
    tr = load_tr_csv(_artifact(out, "tr.csv"))
    m = manifest["ar"]
    ar = ARParams(a=m["a"], c=m["c"], sigma_x_sq=m["sigma_x_sq"],
                  lambda_nominal=m["lambda_nominal"])
    return manifest, truth, dose, tr, ar


def _estimate_grid(cfg, tr, truth):
    if cfg.grid.hi is not None:
        return EtaGrid(cfg.grid.lo, cfg.grid.hi, cfg.grid.step)
    floor = 10.0 if float(truth.values.max()) > 1 else 2.0
    return EtaGrid.from_measurement(tr, floor=floor, step=cfg.grid.step)


def _mse_table_path(cfg, out):
    path = cfg.alternating.mse_table or "mse_table.csv"
    if not os.path.isabs(path):
        path = os.path.join(out, path)
    if not os.path.exists(path):
        raise MissingArtifactError(f"{path} (run the table command first)")
    return path


def _run_alt(cfg, out, tr, ar, grid, truth, dose):
    """Alternating run under the *assumed* process. lambda_init offsets
    only the starting dose assumption; the process parameters (and with
    them the filter's anchor) stay at the assumed nominal."""
    table = load_mse_table(_mse_table_path(cfg, out))
    lambda_init = cfg.alternating.lambda_init
    if lambda_init is None:
        lambda_init = ar.lambda_nominal
    alt_cfg = AlternatingConfig(grid=grid, mse_table=table,
                                lambda_init=lambda_init,
                                max_iterations=cfg.alternating.max_iterations,
                                convergence_tol=cfg.alternating.tol)
    return run_alternating(tr, ar, alt_cfg, truth=truth, dose_true=dose)


def _write_alt_outputs(out, result, suffix=""):
    save_image_csv(os.path.join(out, f"eta_alt{suffix}.csv"), result.eta_final)
    save_pgm(os.path.join(out, f"eta_alt{suffix}.pgm"), result.eta_final.values)
    save_trace_csv(os.path.join(out, f"lambda_alt{suffix}.csv"),
                   ["pixel", "lambda"],
                   [(str(i), v) for i, v in enumerate(result.lambda_final)])
    rows = []
    for i in range(result.iterations):
        rows.append((str(i + 1), result.rel_changes[i], result.sigma_eps_sq[i],
                     result.sigma_gamma_sq[i],
                     "" if result.mse_eta is None else result.mse_eta[i],
                     "" if result.mse_lambda is None else result.mse_lambda[i]))
    save_trace_csv(os.path.join(out, f"alt_diagnostics{suffix}.csv"),
                   ["iteration", "rel_change", "sigma_eps_sq", "sigma_gamma_sq",
                    "mse_eta", "mse_lambda"], rows)


def cmd_estimate(cfg, out):
    """Run the configured estimator list; write per-estimator grids and
    the MSE report. The dose estimate from the alternating pass and the
    true-yield reference dose get lambda rows in the same report."""
    cfg.require("estimators")
    _, truth, dose, tr, ar = _load_dataset(out)
    agg = aggregate(tr)
    grid = _estimate_grid(cfg, tr, truth)

    eta_mses = {}
    lambda_mses = {}
    for name in cfg.estimators:
        if name == "baseline":
            img = baseline_eta(agg, ar.lambda_nominal)
        elif name == "qm":
            img = qm_eta(tr)
        elif name == "lqm":
            img = lqm_eta(tr)
        elif name == "trml":
            img = trml_eta(tr, ar.lambda_nominal, grid)
        elif name == "ft":
            base = baseline_eta(agg, ar.lambda_nominal)
            params = tune_nulling(base, truth, w_max=cfg.nulling.w_max,
                                  h_max=cfg.nulling.h_max)
            img = ft_nulling(base, params)
        elif name == "oracle":
            img = trml_eta(tr, dose, grid)
        else:  # alt
            result = _run_alt(cfg, out, tr, ar, grid, truth, dose)
            img = result.eta_final
            lambda_mses["alt"] = (
                float(np.mean((result.lambda_final - dose.values) ** 2)), 0)
            _write_alt_outputs(out, result)
        eta_mses[name] = image_mse(img, truth)
        if name != "alt":
            save_image_csv(os.path.join(out, f"eta_{name}.csv"), img)
            save_pgm(os.path.join(out, f"eta_{name}.pgm"), img.values)

    ref = lambda_reference(agg, truth)
    lambda_mses["reference"] = masked_dose_mse(ref, dose.values)
    save_trace_csv(os.path.join(out, "lambda_reference.csv"),
                   ["pixel", "lambda"],
                   [(str(i), "nan" if np.isnan(v) else v)
                    for i, v in enumerate(ref)])

    report = build_report(eta_mses, lambda_mses)
    _write_report(out, report, "report")
    return report


def _write_report(out, report, stem):
    with open(os.path.join(out, f"{stem}.csv"), "w") as fh:
        fh.write(report.to_csv_text())
    with open(os.path.join(out, f"{stem}.txt"), "w") as fh:
        fh.write(report.to_table_text())


def cmd_wrong_a(cfg, out, assumed_a):
    """Alternating estimation believing `assumed_a`, on data from the
    true process; baseline rides along for comparison."""
    if not 0 <= assumed_a < 1:
        raise ConfigError("--assumed-a: must be in [0, 1)")
    manifest, truth, dose, tr, ar_true = _load_dataset(out)
    ar = ar_params_from_spec(ar_true.lambda_nominal, manifest["ar"]["cv"],
                             assumed_a)
    agg = aggregate(tr)
    grid = _estimate_grid(cfg, tr, truth)

    result = _run_alt(cfg, out, tr, ar, grid, truth, dose)
    _write_alt_outputs(out, result, suffix="_wrong_a")

    eta_mses = {
        "baseline": image_mse(baseline_eta(agg, ar.lambda_nominal), truth),
        "alt": image_mse(result.eta_final, truth),
    }
    lambda_mses = {
        "alt": (float(np.mean((result.lambda_final - dose.values) ** 2)), 0),
        "reference": masked_dose_mse(lambda_reference(agg, truth), dose.values),
    }
    report = build_report(eta_mses, lambda_mses)
    _write_report(out, report, "report_wrong_a")
    return report


def _single_pixel_trials(eta, lam, n, trials, rng):
    """(trials, n) counts viewed as a trials-pixel measurement."""
    from .acquisition import TRMeasurement
    counts = sample_neyman(NeymanParams(eta=eta, lam=lam / n), rng, (trials, n))
    return TRMeasurement(counts=counts, width=trials, height=1)


def _mc_stats(estimates, eta):
    err = estimates - eta
    bias = float(err.mean())
    variance = float(estimates.var(ddof=1))
    mse = float(np.mean(err * err))
    se = float(np.std(err * err, ddof=1) / np.sqrt(err.size))
    return bias, variance, mse, se


def cmd_sweep_epsilon(cfg, out, seed):
    """MSE of each estimator vs dose mismatch, one shared trial set.

    All epsilon points score the same draws, so curves differ only
    through the assumed dose, not Monte Carlo noise.
    """
    if cfg.sweep.axis != "epsilon":
        raise ConfigError('sweep.axis: must be "epsilon" for this command')
    s = cfg.sweep
    rng = np.random.default_rng(seed)
    tr = _single_pixel_trials(s.eta, s.lam, s.n, s.trials, rng)
    agg_totals = tr.counts.sum(axis=1).astype(float)
    grid = EtaGrid(0.0, s.grid_hi, s.grid_step)

    qm = qm_eta(tr).values.ravel()
    lqm = lqm_eta(tr).values.ravel()
    rows = []
    for eps in s.epsilons:
        assumed = s.lam * (1.0 + eps)
        estimates = {
            "baseline": agg_totals / assumed,
            "qm": qm,
            "lqm": lqm,
            "trml": trml_eta(tr, assumed, grid).values.ravel(),
        }
        for name in ("baseline", "qm", "lqm", "trml"):
            bias, variance, mse, _ = _mc_stats(estimates[name], s.eta)
            rows.append((eps, name, bias, variance, mse))
    save_trace_csv(os.path.join(out, "sweep_epsilon.csv"),
                   ["epsilon", "estimator", "bias", "variance", "mse"],
                   [(r[0], r[1], r[2], r[3], r[4]) for r in rows])


def cmd_sweep_dose(cfg, out, seed):
    """MSE of each estimator vs total dose at fixed dose per
    sub-acquisition; every estimator sees the correct dose."""
    if cfg.sweep.axis != "dose":
        raise ConfigError('sweep.axis: must be "dose" for this command')
    s = cfg.sweep
    rng = np.random.default_rng(seed)
    grid = EtaGrid(0.0, s.grid_hi, s.grid_step)

    rows = []
    for eta in s.etas:
        for lam in s.lambdas:
            n = max(1, int(round(lam / s.dose_per_sub)))
            tr = _single_pixel_trials(eta, lam, n, s.trials, rng)
            agg_totals = tr.counts.sum(axis=1).astype(float)
            estimates = {
                "baseline": agg_totals / lam,
                "qm": qm_eta(tr).values.ravel(),
                "lqm": lqm_eta(tr).values.ravel(),
                "trml": trml_eta(tr, lam, grid).values.ravel(),
            }
            for name in ("baseline", "qm", "lqm", "trml"):
                _, _, mse, se = _mc_stats(estimates[name], eta)
                rows.append((lam, eta, name, mse, se))
    save_trace_csv(os.path.join(out, "sweep_dose.csv"),
                   ["lambda", "eta", "estimator", "mse", "se"],
                   [(r[0], r[1], r[2], r[3], r[4]) for r in rows])


def cmd_table(cfg, out, seed):
    cfg.require("table")
    n = cfg.table.n if cfg.table.n is not None else cfg.n
    if n is None:
        raise ConfigError("table.n: missing and no acquisition section to "
                          "take it from")
    table = build_mse_table(cfg.table.lambda_grid, cfg.table.eta_grid,
                            n=n, trials=cfg.table.trials, seed=seed)
    save_mse_table(os.path.join(out, "mse_table.csv"), table)


if __name__ == "__main__":
    sys.exit(main())
