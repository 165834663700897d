import json
import math

import numpy as np
import pytest

import gffdrift


def test_closed_forms():
    p = gffdrift.ModelParams(lambda_hat=1.0, nu=1.0, eps=0.1, lambda_=1.0)
    d = gffdrift.effective_diffusivity(p)
    assert d["c_sq"] == pytest.approx(8.22403858144487753, rel=1e-14)
    assert d["c"] ** 2 == pytest.approx(d["c_sq"], rel=1e-14)
    assert gffdrift.g_closed(math.pi, p) == pytest.approx(1.02800482268060969, rel=1e-14)
    assert gffdrift.s_closed(math.pi, p) == pytest.approx(math.sqrt(8 * math.pi + 1))
    assert gffdrift.truncated_limit(1, p) == pytest.approx(2 * math.pi)
    for check in gffdrift.identity_suite(p):
        assert check["rel"] <= 1e-10, check


def test_table_brackets_closed_form():
    p = gffdrift.ModelParams()
    t = gffdrift.g_table(6, 4.0, p, grid_size=513)
    g = np.array([gffdrift.g_closed(x, p) for x in t["x"]])
    vals = t["values"]
    assert vals.shape == (6, t["x"].size)
    assert np.all(vals[2] <= g + 1e-12)  # G_3
    assert np.all(vals[3] >= g - 1e-12)  # G_4


def test_bad_parameters_raise():
    with pytest.raises(ValueError):
        gffdrift.ModelParams(eps=2.0)
    with pytest.raises(ValueError):
        gffdrift.l_eps(0.0, gffdrift.ModelParams())


def test_field_shape_and_reproducibility():
    a = gffdrift.sample_field(6.4, 256, 0.2, 3)
    b = gffdrift.sample_field(6.4, 256, 0.2, 3)
    assert a.shape == (256, 256, 2)
    assert np.array_equal(a, b)
    assert abs(a[..., 0].mean()) < 1e-12
    c = gffdrift.theoretical_covariance(0.2, [0.0, 0.0])
    assert c[0][0] == pytest.approx(10.8912249611773912, rel=1e-9)


def test_zero_coupling_moments():
    p = gffdrift.ModelParams(lambda_hat=0.0, nu=1.0, eps=0.2)
    r = gffdrift.annealed_moments(p, 64.0, 16, 1.0, [], 2000, seed=1)
    x = r["stats"]["X_sq"]
    assert abs(x["mean"][-1] - 2.0) <= 4 * x["sem"][-1]
    assert r["bookkeeping_max"] <= 1e-12


def test_resolvent_values():
    p = gffdrift.ModelParams(eps=0.1)
    assert gffdrift.base_diffusivity(p, rel_tol=1e-12) == pytest.approx(3.33858321953712773, rel=1e-9)
    r = gffdrift.replacement_residual(p, [0.0, 0.0], lambda x: 1.0, lambda x: 1.0)
    assert r["residual"] == pytest.approx(9.26774133562034100, rel=1e-7)
    assert gffdrift.mc_laplace_comparator([1.0, 2.0, 3.0], [2.0, 4.0, 6.0], 1.0) == pytest.approx(2.0)


def test_commands(tmp_path):
    cfg = {"output_dir": str(tmp_path / "out"), "analytic": {"grid_size": 512, "csv_points": 9, "truncation_max": 3}}
    code, files, _ = gffdrift.run_command("analytic", cfg, dry_run=True)
    assert code == 0 and files == []
    code, files, _ = gffdrift.run_command("analytic", cfg)
    assert code == 0
    assert "constants.json" in files
    k = json.loads((tmp_path / "out" / "constants.json").read_text())
    assert k["meta"]["config_hash"] == gffdrift.config_hash(cfg)
    with pytest.raises(ValueError):
        gffdrift.run_command("analytic", {"bogus": 1})


def test_criterion_one_passes():
    r = gffdrift.run_criterion(1)
    assert r["passed"], r["summary"]
    assert json.loads(r["json"])["id"] == 1
