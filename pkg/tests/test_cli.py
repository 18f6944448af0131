import datetime as dt
import json

import numpy as np
import pytest

from skewret import cli, distributions as dist
from skewret.reference import REFERENCE_PARAMS


def write_prices(path, increments):
    close = 100 * np.exp(np.concatenate([[0.0], np.cumsum(increments)]))
    d0 = dt.date(1990, 1, 1)
    lines = ["date,close"] + [f"{d0 + dt.timedelta(days=i)},{c!r}" for i, c in enumerate(close.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_increments(path, x):
    path.write_text("\n".join(repr(float(v)) for v in x) + "\n")
    return path


@pytest.fixture(scope="module")
def prices(tmp_path_factory):
    x = dist.sample(REFERENCE_PARAMS["mjf1"], 4000, seed=2)
    return write_prices(tmp_path_factory.mktemp("data") / "prices.csv", x)


def test_stats_document(prices, tmp_path):
    assert cli.main(["stats", "--input", str(prices), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "stats.json").read_text())
    for key in ("m1", "m2", "median", "mode_smoothed", "w_g", "w_l", "n_gains", "n_losses", "zeta1", "zeta2"):
        assert doc[key] is not None
    assert doc["n"] == 4000
    header = (tmp_path / "ccdf_losses.csv").read_text().splitlines()[0]
    assert header == "x,ccdf"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "stats" and manifest["seed"] == 0
    assert set(manifest["versions"]) == {"skewret", "numpy", "scipy", "numba"}


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert cli.main(["stats", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_bad_flags_are_usage_errors(prices, tmp_path):
    assert cli.main(["fit", "--input", str(prices), "--out", str(tmp_path), "--models", ""]) == 2
    assert cli.main(["fit", "--input", str(prices), "--out", str(tmp_path), "--models", "gauss"]) == 2
    assert cli.main(["tails", "--input", str(prices), "--out", str(tmp_path), "--ci-level", "1.5"]) == 2
    assert cli.main(["nonsense"]) == 2


def test_fit_all_models_with_comparison(prices, tmp_path):
    args = ["fit", "--input", str(prices), "--out", str(tmp_path), "--optimizer", "quasi-newton", "--restarts", "1"]
    assert cli.main(args) == 0
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert set(doc["fits"]) == set(cli.MODEL_IDS)
    assert len(doc["comparison"]) == sum("error" not in f for f in doc["fits"].values()) >= 2
    assert all(set(row) == {"model", "log_likelihood", "k", "aic"} for row in doc["comparison"])
    assert doc["reconcile"] and "m1" in doc["summary_stats"]["mjf1"]


def test_outputs_are_byte_identical(prices, tmp_path):
    args = ["report", "--input", str(prices), "--models", "student", "--optimizer", "quasi-newton", "--restarts", "2"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "a2")]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        if f.name != "manifest.json":
            assert f.read_bytes() == (tmp_path / "a2" / f.name).read_bytes(), f.name


def test_tails_on_pareto_increments(tmp_path):
    rng = np.random.default_rng(17)
    x = rng.random(200_000) ** (-1 / 3.0) * rng.choice([-1.0, 1.0], 200_000)
    inc = write_increments(tmp_path / "pareto.txt", x)
    assert cli.main(["tails", "--input", str(inc), "--increments", "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "tails.json").read_text())
    for side in ("gains", "losses"):
        rep = doc[side]
        # seed-to-seed sd of this estimator at 1000 tail points is ~0.13
        assert abs(rep["slope"] + 3.0) < 0.4
        assert rep["slope_stderr"] > 0


def test_tails_flags_injected_outlier(tmp_path):
    x = dist.sample(REFERENCE_PARAMS["mjf1"], 20_000, seed=4)
    x[np.argmax(x)] *= 10
    inc = write_increments(tmp_path / "inc.txt", x)
    assert cli.main(["tails", "--input", str(inc), "--increments", "--out", str(tmp_path / "o"), "--models", "mjf1",
                     "--optimizer", "quasi-newton", "--restarts", "1"]) == 0
    doc = json.loads((tmp_path / "o" / "tails.json").read_text())
    assert 1 in doc["gains"]["dragon_kings"]
    assert "mjf1" in doc["gains"]["overlays"]
    rows = (tmp_path / "o" / "tail_gains.csv").read_text().splitlines()
    assert rows[0].startswith("rank,x,ccdf") and "mjf1_p_value" in rows[0]
    assert rows[1].split(",")[7] == "dragon-king"


def test_tails_insufficient_points_is_computation_failure(tmp_path):
    inc = write_increments(tmp_path / "tiny.txt", np.linspace(-1, 1, 15))
    assert cli.main(["tails", "--input", str(inc), "--increments", "--out", str(tmp_path),
                     "--tail-fraction", "0.9999"]) == 1
    assert (tmp_path / "manifest.json").exists()


def test_config_document_with_flag_override(prices, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"tail_fraction": 0.02, "ci-level": 0.9, "seed": 5}))
    assert cli.main(["tails", "--input", str(prices), "--out", str(tmp_path / "o"), "--config", str(cfg),
                     "--seed", "9"]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["tail_fraction"] == 0.02
    assert manifest["config"]["ci_level"] == 0.9
    assert manifest["seed"] == 9
    cfg.write_text(json.dumps({"warp": 1}))
    assert cli.main(["tails", "--input", str(prices), "--out", str(tmp_path), "--config", str(cfg)]) == 2


def test_simulate_default_diagnostics_pass(tmp_path):
    assert cli.main(["simulate", "--out", str(tmp_path), "--paths", "200", "--export", "--days", "200"]) == 0
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["passed"] and diag["variance"]["ks_pvalue"] > 0.01
    assert (tmp_path / "ensemble.csv").read_text().startswith("path,step,x,v\n")


def test_simulate_large_dt_fails_loudly(tmp_path, capsys):
    assert cli.main(["simulate", "--out", str(tmp_path), "--paths", "300", "--dt", "1.0"]) == 1
    assert "diagnostics failed" in capsys.readouterr().err
    assert not json.loads((tmp_path / "diagnostics.json").read_text())["passed"]


def test_simulate_explosion_names_path(tmp_path, capsys):
    code = cli.main(["simulate", "--out", str(tmp_path), "--paths", "2", "--alpha", "1e-12", "--scheme", "reflection",
                     "--days", "5", "--burn-in-days", "5"])
    assert code == 1
    assert "path" in capsys.readouterr().err


def test_version_flag(capsys):
    assert cli.main(["--version"]) == 0
    assert "skewret" in capsys.readouterr().out
