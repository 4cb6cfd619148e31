import json
import math
import os

import pytest

import evaq


def test_version():
    assert evaq.__version__ == "0.1.0"


def test_haversine_known_pair():
    # Tokyo Station to Shin-Osaka, roughly 400 km.
    d = evaq.haversine_m(35.681, 139.767, 34.733, 135.500)
    assert 390_000 < d < 410_000
    assert evaq.haversine_m(35.0, 135.0, 35.0, 135.0) == 0.0


def test_frag_eval_median_point():
    mu = 1.73
    assert evaq.frag_eval(math.exp(mu), mu, 0.075, 0.63) == pytest.approx(
        0.63 / 2, abs=1e-12
    )
    assert evaq.frag_eval(0.0, mu, 0.075, 0.63) == 0.0
    with pytest.raises(evaq.ConfigError):
        evaq.frag_eval(6.0, mu, 0.0, 0.63)


def test_fit_mle_recovers_exact_rates():
    truth = (1.73, 0.075, 0.63)
    rows = []
    for k in range(60):
        z = 4.0 + k * (2.7 / 59.0)
        M = 100_000
        p = evaq.frag_eval(z, *truth)
        rows.append((z, M, round(M * p)))
    fit = evaq.fit_mle(rows)
    assert fit["mu"] == pytest.approx(truth[0], abs=0.01)
    assert fit["sigma"] == pytest.approx(truth[1], abs=0.01)
    assert fit["a"] == pytest.approx(truth[2], abs=0.01)


def test_pearson_and_mape():
    x = [1.0, 2.0, 3.0, 4.0]
    assert evaq.pearson_r(x, [2.0 * v for v in x]) == pytest.approx(1.0)
    assert evaq.mape([1.0, 2.0], [1.1, 1.8]) == pytest.approx(10.0)


def test_power_law_pdf_normalizes():
    dists = [200.0 * (1e6 / 200.0) ** (i / 9999.0) for i in range(10000)]
    pdf = evaq.distance_pdf(dists, 200.0, 1e6, 8)
    total = sum(
        d * (hi - lo)
        for d, lo, hi in zip(pdf["density"], pdf["edges"], pdf["edges"][1:])
    )
    assert total == pytest.approx(1.0, abs=1e-9)
    fit = evaq.fit_power_law(dists, 200.0, 1e6, 8, 100)
    assert fit["n"] == 10000


def test_mean_shift_two_clusters():
    pts = [(35.0, 135.0)] * 8 + [(35.05, 135.0)] * 2
    modes = evaq.mean_shift(pts, [1.0] * 10, 300.0)
    assert len(modes) == 2
    assert modes[0][2] > modes[1][2]
    assert evaq.haversine_m(modes[0][0], modes[0][1], 35.0, 135.0) < 1.0


def test_predict_evacuees():
    rep = evaq.predict_evacuees(
        {"A": 1000.0, "B": 500.0}, {"A": 6.5, "B": 5.0, "C": 6.0}, 1.73, 0.075, 0.63
    )
    assert rep["missing"] == ["C"]
    assert rep["total_population"] == pytest.approx(1500.0)
    assert rep["rows"]["A"] == pytest.approx(
        1000.0 * evaq.frag_eval(6.5, 1.73, 0.075, 0.63)
    )


def test_scenario_and_pipeline(tmp_path):
    data = tmp_path / "data"
    out = tmp_path / "out"
    summary = evaq.generate_scenario(str(data), preset="small", seed=11)
    assert summary["n_users"] > 0
    for name in ("gps.csv", "lgu.csv", "intensity.csv", "ground_truth.csv"):
        assert (data / name).exists()

    scenario = json.loads((data / "scenario_used.json").read_text())
    config = {
        "gps": str(data / "gps.csv"),
        "lgu": str(data / "lgu.csv"),
        "intensity": str(data / "intensity.csv"),
        "census": str(data / "census.csv"),
        "out_dir": str(out),
        "event_time": scenario["event_time"],
        "sample_rate": scenario["sample_rate"],
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))

    result = evaq.run_pipeline(str(cfg_path))
    assert result["n_users"] == summary["n_users"]
    assert result["n_evacuated"] > 0
    assert 0.0 < result["a"] <= 1.0
    for name in ("homes.csv", "evac.csv", "rates.csv", "fragility.json",
                 "manifest.json"):
        assert (out / name).exists()

    frag = json.loads(
        "\n".join(
            line
            for line in (out / "fragility.json").read_text().splitlines()
            if not line.startswith("#")
        )
    )
    assert frag["mu"] == pytest.approx(result["mu"])
