import math

import pytest

import kolmo


def test_classify_and_equilibria():
    p = kolmo.ModelParams(1.0, 0.0, (0.0, 0.0, 0.0))
    assert kolmo.classify(p)["case"] == "I"
    eq = kolmo.equilibria(p)
    assert len(eq["isolated"]) == 5
    assert kolmo.h_star(p) == pytest.approx(3.0)
    assert kolmo.drift(p, (1.0, 1.0, 1.0)) == pytest.approx([-2.0, -2.0, -2.0])


def test_invalid_params_raise():
    with pytest.raises(ValueError):
        kolmo.ModelParams(-1.0)


def test_logistic_layer():
    p = kolmo.ModelParams.from_sigma2(1.0, 1.0)
    path = kolmo.sample_path(3, -60.0, 0.0, 1e-2)
    u = kolmo.u_g(p, path)
    assert u > 0
    assert kolmo.stationary_density(p, 1e-12) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-9)
    assert kolmo.density_mode(kolmo.ModelParams.from_sigma2(1.0, 0.5)) == pytest.approx(math.sqrt(0.5))
    assert kolmo.density_mode(p) is None


def test_sde_and_decomposition():
    p = kolmo.ModelParams.from_sigma2(1.0, 0.5)
    path = kolmo.sample_path(1, 0.0, 1.0, 1e-3)
    rec = kolmo.integrate_sde(p, path, (1.0, 1.0, 1.0), 1.0, dt=1e-3)
    assert len(rec["t"]) == 1001
    d = kolmo.decompose(p, path, (1.0, 1.0, 1.0), 1.0, 1.0)
    assert math.dist(d, rec["x"][-1]) < 1e-2


def test_lyapunov_and_samples():
    p = kolmo.ModelParams.from_sigma2(1.0, 1.0)
    assert kolmo.lyapunov_analytic(p, "O") == pytest.approx([0.5, 0.5, 0.5])
    est = kolmo.lyapunov_numeric(p, [1, 2], "O", (1.0, 0.0, 0.0), T=500.0)
    assert abs(est["value"] - 0.5) < 0.1
    xs = kolmo.u_g_samples(p, 7, 2000)
    ks = kolmo.ks_distance(xs, lambda s: kolmo.stationary_cdf(p, s))
    assert ks < 0.05


def test_run_writes_manifest(tmp_path):
    res = kolmo.run("classify", {"alpha": "1", "d": "0,0,0"}, str(tmp_path))
    assert res["summary"]["case"] == "I"
    assert (tmp_path / "manifest.json").exists()
    assert "classify" in kolmo.subcommands()
