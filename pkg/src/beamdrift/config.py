"""Experiment configuration: one JSON document per experiment.

Validation is strict and total: every out-of-domain value and every
unknown key raises ConfigError naming the offending field path (for
example "ar.a"), so a malformed document always yields a diagnostic
instead of a traceback from deep inside a command. Sections are
optional at parse time; each command checks for the sections it needs.
"""

import json
from dataclasses import dataclass

from .synthetic import TRUTH_KINDS

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TruthSpec",
    "ARSpec",
    "GridSpec",
    "AltSpec",
    "NullingSpec",
    "SweepSpec",
    "TableSpec",
    "ESTIMATOR_NAMES",
    "load_config",
]

ESTIMATOR_NAMES = ("baseline", "qm", "lqm", "trml", "ft", "oracle", "alt")


class ConfigError(ValueError):
    """A config document failed validation; the message names the field."""


@dataclass(frozen=True)
class TruthSpec:
    kind: str
    width: int
    height: int
    eta_min: float
    eta_max: float
    path: str = None


@dataclass(frozen=True)
class ARSpec:
    lambda_nominal: float
    cv: float
    a: float


@dataclass(frozen=True)
class GridSpec:
    lo: float = 0.0
    hi: float = None  # None: sized from the measurement
    step: float = 0.01


@dataclass(frozen=True)
class AltSpec:
    max_iterations: int = 10
    tol: float = 1e-4
    lambda_init: float = None  # None: nominal dose
    mse_table: str = None  # None: <out>/mse_table.csv


@dataclass(frozen=True)
class NullingSpec:
    w_max: int = 5
    h_max: int = None


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "none"
    eta: float = None
    lam: float = None
    n: int = None
    epsilons: tuple = None
    etas: tuple = None
    lambdas: tuple = None
    dose_per_sub: float = None
    trials: int = None
    grid_hi: float = 10.0
    grid_step: float = 0.01


@dataclass(frozen=True)
class TableSpec:
    lambda_grid: tuple
    eta_grid: tuple
    trials: int = 2000
    n: int = None  # None: the acquisition n


@dataclass(frozen=True)
class ExperimentConfig:
    truth: TruthSpec = None
    ar: ARSpec = None
    n: int = None
    estimators: tuple = None
    grid: GridSpec = GridSpec()
    alternating: AltSpec = AltSpec()
    nulling: NullingSpec = NullingSpec()
    sweep: SweepSpec = SweepSpec()
    table: TableSpec = None
    seed: int = 0
    out: str = None

    def require(self, *sections):
        """Raise ConfigError unless every named section/field is present."""
        for name in sections:
            if getattr(self, name) is None:
                raise ConfigError(f"{name}: required by this command but missing")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    return parse_config(doc)


def parse_config(doc) -> ExperimentConfig:
    _known(doc, ("truth", "ar", "acquisition", "estimators", "grid",
                 "alternating", "nulling", "sweep", "table", "seed", "out"), "")
    return ExperimentConfig(
        truth=_parse_truth(doc.get("truth")),
        ar=_parse_ar(doc.get("ar")),
        n=_parse_acquisition(doc.get("acquisition"), doc.get("ar")),
        estimators=_parse_estimators(doc.get("estimators")),
        grid=_parse_grid(doc.get("grid")),
        alternating=_parse_alt(doc.get("alternating")),
        nulling=_parse_nulling(doc.get("nulling")),
        sweep=_parse_sweep(doc.get("sweep")),
        table=_parse_table(doc.get("table")),
        seed=_int(doc.get("seed", 0), "seed", lo=0),
        out=_str(doc.get("out"), "out") if "out" in doc else None,
    )


def _parse_truth(sec):
    if sec is None:
        return None
    _section(sec, "truth")
    _known(sec, ("kind", "width", "height", "eta_min", "eta_max", "path"), "truth")
    kind = _str(_get(sec, "kind", "truth"), "truth.kind")
    if kind not in TRUTH_KINDS + ("image",):
        raise ConfigError(f"truth.kind: {kind!r} is not one of "
                          f"{TRUTH_KINDS + ('image',)}")
    path = None
    if kind == "image":
        path = _str(_get(sec, "path", "truth"), "truth.path")
    elif "path" in sec:
        raise ConfigError("truth.path: only valid with kind \"image\"")
    eta_min = _float(_get(sec, "eta_min", "truth"), "truth.eta_min", lo=0.0)
    eta_max = _float(_get(sec, "eta_max", "truth"), "truth.eta_max")
    if eta_max <= eta_min:
        raise ConfigError("truth.eta_max: must exceed truth.eta_min")
    return TruthSpec(
        kind=kind,
        width=_int(_get(sec, "width", "truth"), "truth.width", lo=1),
        height=_int(_get(sec, "height", "truth"), "truth.height", lo=1),
        eta_min=eta_min,
        eta_max=eta_max,
        path=path,
    )


def _parse_ar(sec):
    if sec is None:
        return None
    _section(sec, "ar")
    _known(sec, ("lambda_nominal", "cv", "a"), "ar")
    return ARSpec(
        lambda_nominal=_float(_get(sec, "lambda_nominal", "ar"),
                              "ar.lambda_nominal", lo=0.0, lo_open=True),
        cv=_float(_get(sec, "cv", "ar"), "ar.cv", lo=0.0),
        a=_float(_get(sec, "a", "ar"), "ar.a", lo=0.0, hi=1.0, hi_open=True),
    )


def _parse_acquisition(sec, ar_sec):
    """Accept n directly or derive it from the per-sub-acquisition dose."""
    if sec is None:
        return None
    _section(sec, "acquisition")
    _known(sec, ("n", "dose_per_sub"), "acquisition")
    if ("n" in sec) == ("dose_per_sub" in sec):
        raise ConfigError("acquisition: give exactly one of n, dose_per_sub")
    if "n" in sec:
        return _int(sec["n"], "acquisition.n", lo=1)
    per = _float(sec["dose_per_sub"], "acquisition.dose_per_sub",
                 lo=0.0, lo_open=True)
    if not isinstance(ar_sec, dict) or "lambda_nominal" not in ar_sec:
        raise ConfigError("acquisition.dose_per_sub: needs ar.lambda_nominal")
    lam = _float(ar_sec["lambda_nominal"], "ar.lambda_nominal",
                 lo=0.0, lo_open=True)
    n = int(round(lam / per))
    if n < 1:
        raise ConfigError("acquisition.dose_per_sub: implies n < 1")
    return n


def _parse_estimators(value):
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError("estimators: must be a nonempty list of names")
    names = []
    for i, v in enumerate(value):
        name = _str(v, f"estimators[{i}]")
        if name not in ESTIMATOR_NAMES:
            raise ConfigError(f"estimators[{i}]: {name!r} is not one of "
                              f"{ESTIMATOR_NAMES}")
        if name in names:
            raise ConfigError(f"estimators[{i}]: duplicate {name!r}")
        names.append(name)
    return tuple(names)


def _parse_grid(sec):
    if sec is None:
        return GridSpec()
    _section(sec, "grid")
    _known(sec, ("lo", "hi", "step"), "grid")
    lo = _float(sec.get("lo", 0.0), "grid.lo", lo=0.0)
    hi = None
    if sec.get("hi") is not None:
        hi = _float(sec["hi"], "grid.hi")
        if hi <= lo:
            raise ConfigError("grid.hi: must exceed grid.lo")
    return GridSpec(lo=lo, hi=hi,
                    step=_float(sec.get("step", 0.01), "grid.step",
                                lo=0.0, lo_open=True))


def _parse_alt(sec):
    if sec is None:
        return AltSpec()
    _section(sec, "alternating")
    _known(sec, ("max_iterations", "tol", "lambda_init", "mse_table"),
           "alternating")
    lambda_init = None
    if sec.get("lambda_init") is not None:
        lambda_init = _float(sec["lambda_init"], "alternating.lambda_init",
                             lo=0.0, lo_open=True)
    mse_table = None
    if sec.get("mse_table") is not None:
        mse_table = _str(sec["mse_table"], "alternating.mse_table")
    return AltSpec(
        max_iterations=_int(sec.get("max_iterations", 10),
                            "alternating.max_iterations", lo=1),
        tol=_float(sec.get("tol", 1e-4), "alternating.tol", lo=0.0, lo_open=True),
        lambda_init=lambda_init,
        mse_table=mse_table,
    )


def _parse_nulling(sec):
    if sec is None:
        return NullingSpec()
    _section(sec, "nulling")
    _known(sec, ("w_max", "h_max"), "nulling")
    h_max = None
    if sec.get("h_max") is not None:
        h_max = _int(sec["h_max"], "nulling.h_max", lo=0)
    return NullingSpec(w_max=_int(sec.get("w_max", 5), "nulling.w_max", lo=0),
                       h_max=h_max)


def _parse_sweep(sec):
    if sec is None:
        return SweepSpec()
    _section(sec, "sweep")
    _known(sec, ("axis", "eta", "lam", "n", "epsilons", "etas", "lambdas",
                 "dose_per_sub", "trials", "grid_hi", "grid_step"), "sweep")
    axis = _str(sec.get("axis", "none"), "sweep.axis")
    if axis not in ("none", "epsilon", "dose"):
        raise ConfigError(f"sweep.axis: {axis!r} is not one of "
                          "('none', 'epsilon', 'dose')")

    def opt_float(key, **kw):
        return None if sec.get(key) is None else _float(sec[key], f"sweep.{key}", **kw)

    def opt_int(key, **kw):
        return None if sec.get(key) is None else _int(sec[key], f"sweep.{key}", **kw)

    def opt_list(key, lo=None, lo_open=False):
        if sec.get(key) is None:
            return None
        value = sec[key]
        if not isinstance(value, list) or not value:
            raise ConfigError(f"sweep.{key}: must be a nonempty list")
        return tuple(_float(v, f"sweep.{key}[{i}]", lo=lo, lo_open=lo_open)
                     for i, v in enumerate(value))

    epsilons = opt_list("epsilons")
    if epsilons is not None and any(e <= -1 for e in epsilons):
        raise ConfigError("sweep.epsilons: every value must exceed -1")
    spec = SweepSpec(
        axis=axis,
        eta=opt_float("eta", lo=0.0, lo_open=True),
        lam=opt_float("lam", lo=0.0, lo_open=True),
        n=opt_int("n", lo=1),
        epsilons=epsilons,
        etas=opt_list("etas", lo=0.0, lo_open=True),
        lambdas=opt_list("lambdas", lo=0.0, lo_open=True),
        dose_per_sub=opt_float("dose_per_sub", lo=0.0, lo_open=True),
        trials=opt_int("trials", lo=1),
        grid_hi=_float(sec.get("grid_hi", 10.0), "sweep.grid_hi",
                       lo=0.0, lo_open=True),
        grid_step=_float(sec.get("grid_step", 0.01), "sweep.grid_step",
                         lo=0.0, lo_open=True),
    )
    required = {
        "none": (),
        "epsilon": ("eta", "lam", "n", "epsilons", "trials"),
        "dose": ("etas", "lambdas", "dose_per_sub", "trials"),
    }[axis]
    for key in required:
        if getattr(spec, key) is None:
            raise ConfigError(f"sweep.{key}: required when sweep.axis is {axis!r}")
    return spec


def _parse_table(sec):
    if sec is None:
        return None
    _section(sec, "table")
    _known(sec, ("lambda_grid", "eta_grid", "trials", "n"), "table")

    def grid(key):
        value = _get(sec, key, "table")
        if not isinstance(value, list) or not value:
            raise ConfigError(f"table.{key}: must be a nonempty list")
        return tuple(_float(v, f"table.{key}[{i}]", lo=0.0, lo_open=True)
                     for i, v in enumerate(value))

    n = None
    if sec.get("n") is not None:
        n = _int(sec["n"], "table.n", lo=1)
    return TableSpec(
        lambda_grid=grid("lambda_grid"),
        eta_grid=grid("eta_grid"),
        trials=_int(sec.get("trials", 2000), "table.trials", lo=1000),
        n=n,
    )


def _section(sec, path):
    if not isinstance(sec, dict):
        raise ConfigError(f"{path}: must be a JSON object")


def _known(sec, allowed, prefix):
    for key in sec:
        if key not in allowed:
            where = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"{where}: unknown field")


def _get(sec, key, prefix):
    if key not in sec:
        raise ConfigError(f"{prefix}.{key}: missing required field")
    return sec[key]


def _float(value, path, lo=None, hi=None, lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if v != v or v in (float("inf"), float("-inf")):
        raise ConfigError(f"{path}: must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{path}: must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(f"{path}: must be {'<' if hi_open else '<='} {hi}")
    return v


def _int(value, path, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    return value


def _str(value, path):
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{path}: expected a nonempty string, got {value!r}")
    return value
