"""Artifact serialization: CSV grids, 16-bit PGM previews, JSON manifests.

Every writer is bit-stable: floats are formatted with repr (shortest
round-trip), JSON keys are sorted, no timestamps anywhere. Identical
inputs produce identical bytes, which is what makes fixed-seed runs
byte-reproducible end to end.
"""

import json

import numpy as np

from .acquisition import TRMeasurement, YieldImage
from .beam_model import ARParams, DoseField
from .sequential_filter import MseTable

__all__ = [
    "save_image_csv", "load_image_csv",
    "save_dose_csv", "load_dose_csv",
    "save_tr_csv", "load_tr_csv",
    "save_trace_csv",
    "save_pgm",
    "save_mse_table", "load_mse_table",
    "save_manifest", "load_manifest",
]


def _fmt(x):
    return repr(float(x))


def save_image_csv(path, image: YieldImage):
    with open(path, "w") as fh:
        fh.write(f"# width={image.width} height={image.height}\n")
        for row in image.values:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def load_image_csv(path) -> YieldImage:
    with open(path) as fh:
        header = fh.readline()
        width, height = _parse_header(header, ("width", "height"), path)
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    if values.shape != (int(height), int(width)):
        raise ValueError(f"{path}: data does not match declared dimensions")
    return YieldImage(values)


def save_dose_csv(path, field: DoseField):
    p = field.params
    with open(path, "w") as fh:
        fh.write(f"# width={field.width} height={field.height}\n")
        fh.write(f"# a={p.a!r} c={p.c!r} sigma_x_sq={p.sigma_x_sq!r} "
                 f"lambda_nominal={p.lambda_nominal!r}\n")
        fh.write("\n".join(_fmt(v) for v in field.values) + "\n")


def load_dose_csv(path) -> DoseField:
    with open(path) as fh:
        width, height = _parse_header(fh.readline(), ("width", "height"), path)
        a, c, sx2, lam = _parse_header(
            fh.readline(), ("a", "c", "sigma_x_sq", "lambda_nominal"), path)
        values = np.loadtxt(fh)
    params = ARParams(a=a, c=c, sigma_x_sq=sx2, lambda_nominal=lam)
    return DoseField(values=np.atleast_1d(values), params=params,
                     width=int(width), height=int(height))


def save_tr_csv(path, tr: TRMeasurement):
    """Counts in a flat (pixel, k, count) layout, no binary."""
    n_pixels, n = tr.counts.shape
    pixel = np.repeat(np.arange(n_pixels), n)
    k = np.tile(np.arange(n), n_pixels)
    rows = np.column_stack([pixel, k, tr.counts.ravel()])
    with open(path, "w") as fh:
        fh.write(f"# width={tr.width} height={tr.height} n={n}\n")
        fh.write("pixel,k,count\n")
        np.savetxt(fh, rows, fmt="%d", delimiter=",")


def load_tr_csv(path) -> TRMeasurement:
    with open(path) as fh:
        width, height, n = (int(v) for v in
                            _parse_header(fh.readline(), ("width", "height", "n"), path))
        fh.readline()  # column names
        rows = np.loadtxt(fh, delimiter=",", dtype=np.int64, ndmin=2)
    counts = np.zeros((width * height, n), dtype=np.int64)
    counts[rows[:, 0], rows[:, 1]] = rows[:, 2]
    return TRMeasurement(counts=counts, width=width, height=height)


def save_trace_csv(path, columns, rows):
    """Generic CSV: column-name header then rows of str/repr cells."""
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


def save_pgm(path, values):
    """16-bit binary PGM preview, scaled to the data range.

    The scale bounds ride along in a comment so the mapping stays
    interpretable; CSV remains the exact record.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("PGM wants a 2-D grid")
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo if hi > lo else 1.0
    scaled = np.rint((values - lo) / span * 65535).astype(">u2")
    header = (f"P5\n# min={lo!r} max={hi!r}\n"
              f"{values.shape[1]} {values.shape[0]}\n65535\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(scaled.tobytes())


def save_mse_table(path, table: MseTable):
    with open(path, "w") as fh:
        fh.write(f"# n={table.n} trials={table.trials} seed={table.seed}\n")
        fh.write("lambda,eta,mse,se\n")
        for row in zip(table.lam, table.eta, table.mse, table.se):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def load_mse_table(path) -> MseTable:
    with open(path) as fh:
        n, trials, seed = (int(v) for v in
                           _parse_header(fh.readline(), ("n", "trials", "seed"), path))
        fh.readline()
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return MseTable(lam=data[:, 0], eta=data[:, 1], mse=data[:, 2], se=data[:, 3],
                    n=n, trials=trials, seed=seed)


def save_manifest(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def _parse_header(line, keys, path):
    """Parse '# key=value ...' headers; raises on any mismatch."""
    if not line.startswith("#"):
        raise ValueError(f"{path}: missing metadata header")
    fields = dict(part.split("=", 1) for part in line[1:].split())
    try:
        return tuple(float(fields[k]) for k in keys)
    except KeyError as missing:
        raise ValueError(f"{path}: header lacks field {missing}") from None
