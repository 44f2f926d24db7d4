import math

import numpy as np
import pytest

import lattice_ldp

SMALL = """
[lattice]
n = 2
[time]
T = 0.5
dt = 0.005
[run]
seed = 3
replicas = 8
record_every = 10
"""


def test_version():
    assert lattice_ldp.__version__.count(".") == 2


def test_resolve_config_echoes_defaults():
    text = lattice_ldp.resolve_config(SMALL)
    assert "R_J = 2" in text
    assert "M = 4096" in text
    assert lattice_ldp.resolve_config(text) == text


def test_bad_config_raises():
    with pytest.raises(ValueError, match="unknown key"):
        lattice_ldp.resolve_config("[lattice]\nm = 3\n")


def test_kernel_weights():
    k = lattice_ldp.build_kernel()
    assert k["lambda"].shape == (121,)
    assert abs(k["lambda"].sum() - 1.0) <= 1e-8
    assert k["min_lambda"] > 0
    assert k["max_violation"] <= 1e-8


def test_noise_covariance_and_shape():
    out = lattice_ldp.sample_noise(n=2, steps=50, replicas=4000, seed=1, record_every=50)
    paths = out["paths"]
    assert paths.shape == (4000, 2, 5)
    assert out["steps"] == [0, 50]
    assert np.all(paths[:, 0, :] == 0.0)
    terminal = paths[:, 1, :]
    cov = np.mean(terminal[:, 2] * terminal[:, 3])
    assert abs(cov - 0.4) < 5 * math.sqrt((1 + 0.16) / 4000)


def test_simulate_is_worker_independent():
    a = lattice_ldp.simulate(SMALL, workers=1)
    b = lattice_ldp.simulate(SMALL, workers=4)
    assert a["v"].shape == (8, 11, 5)
    assert np.array_equal(a["v"], b["v"])
    assert np.all(a["synapse_min_margin"] >= 0)


def test_verify_kernels_suite():
    rows = lattice_ldp.verify(SMALL, suite="kernels")
    assert len(rows) == 5
    assert all(r["passed"] for r in rows)


def test_scaling_and_wilson():
    rows = lattice_ldp.scaling(SMALL.replace("replicas = 8", "replicas = 100"), [1, 2])
    assert [r["sites"] for r in rows] == [3, 5]
    lo, hi = lattice_ldp.wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
