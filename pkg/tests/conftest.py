"""Shared fixtures: a medium-drift reference dataset and its ML
error-variance lookup, built once per session.

The dataset reproduces the package's standard scenario: 128x128 blob
truth with yields in [1, 5], nominal dose 20 with cv 0.2 and
autocorrelation 0.999, 200 sub-acquisitions (dose 0.1 per
sub-acquisition). Seeds are frozen so every Monte Carlo assertion in
the suite is a deterministic check.
"""

import numpy as np
import pytest

import beamdrift as bd

DATASET_SEED = 20260817
TABLE_SEED = 1729


@pytest.fixture(scope="session", autouse=True)
def _warm_kernel():
    # first grid-search call JIT-compiles; keep that out of timed tests
    rng = np.random.default_rng(0)
    counts = rng.poisson(0.2, (4, 8))
    tr = bd.TRMeasurement(counts=counts, width=2, height=2)
    bd.trml_eta(tr, 2.0, bd.EtaGrid(0.0, 2.0, 0.5))


@pytest.fixture(scope="session")
def medium_drift_dataset():
    rng = np.random.default_rng(DATASET_SEED)
    truth = bd.make_truth("blobs", 128, 128, 1.0, 5.0, rng)
    ar = bd.ar_params_from_spec(20.0, 0.2, 0.999)
    dose = bd.generate_dose_field(ar, 128, 128, rng)
    tr = bd.acquire_time_resolved(truth, dose, 200, rng)
    return {"truth": truth, "ar": ar, "dose": dose, "tr": tr,
            "agg": bd.aggregate(tr), "cv": 0.2, "n": 200}


@pytest.fixture(scope="session")
def medium_drift_table():
    return bd.build_mse_table((10.0, 20.0, 50.0), (1.0, 2.0, 3.0, 4.0, 5.0),
                              n=200, trials=1000, seed=TABLE_SEED)


@pytest.fixture(scope="session")
def fine_grid():
    return bd.EtaGrid(0.0, 10.0, 0.01)


@pytest.fixture(scope="session")
def medium_drift_alt(medium_drift_dataset, medium_drift_table, fine_grid):
    d = medium_drift_dataset
    cfg = bd.AlternatingConfig(grid=fine_grid, mse_table=medium_drift_table,
                               lambda_init=d["ar"].lambda_nominal,
                               max_iterations=10, convergence_tol=1e-4)
    return bd.run_alternating(d["tr"], d["ar"], cfg,
                              truth=d["truth"], dose_true=d["dose"])
