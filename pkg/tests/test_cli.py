import csv
import io
import math

import pytest

from seqmulti.cli import main
from seqmulti.config import ExperimentConfig, parse_config
from seqmulti.experiments import format_value, run_figure_sweep, to_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_config_defaults_and_parsing():
    cfg = parse_config(
        """
        [panel]
        K = 6
        theta1 = 0.75
        [prior]
        kind = bounded
        l = 1
        u = 4
        sizes = 1, 2
        [procedure]
        kind = gi
        thresholds = conservative
        alpha = 1e-3
        [run]
        reps = 500
        seed = 9
        alphas = 1e-2, 1e-3
        """
    )
    assert (cfg.K, cfg.theta1, cfg.prior, cfg.procedure) == (6, 0.75, "bounded", "gi")
    assert cfg.alphas == (1e-2, 1e-3) and cfg.sizes == (1, 2)
    assert cfg.base_rule().get_params()["u"] == 4
    base = ExperimentConfig()
    assert (base.K, base.theta1, base.alpha) == (10, 0.5, base.beta)


@pytest.mark.parametrize(
    "text",
    [
        "[panel]\nK = 1\n",
        "[run]\nalphas = 1e-3, 1e-2\n",
        "[procedure]\nkind = magic\n",
        "[bogus]\nx = 1\n",
        "[panel]\ncolour = red\n",
        "[prior]\nm = 12\n",
        "[run]\nreps = 1\n",
        "[panel]\nK = ten\n",
    ],
)
def test_config_rejects_invalid(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_format_value():
    assert format_value("alpha", 0.01) == "1.0000000000000000e-02"
    assert format_value("ess", 0.1) == "0.10000000000000001"
    assert format_value("size", 3) == "3"
    assert format_value("ess", math.nan) == "nan"
    assert to_csv([{"a": 1}], ("a", "b")) == "a,b\n1,\n"


def test_bound_command(capsys):
    code, out, _ = run(capsys, "bound", "--procedure", "gap", "--m", "3", "--c", "10")
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["bound_type1"]) == pytest.approx(9.534e-4, rel=1e-3)


def test_bound_command_conservative_intersection(capsys):
    code, out, _ = run(capsys, "bound", "--procedure", "intersection", "--thresholds",
                       "conservative", "--alpha", "1e-3", "--beta", "1e-3")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 11
    assert max(float(r["bound_type1"]) for r in rows) <= 1e-3 * (1 + 1e-12)


def test_lower_bound_command(capsys):
    code, out, _ = run(capsys, "lower-bound", "--procedure", "gap", "--m", "1",
                       "--alpha", "1e-4", "--beta", "1e-4")
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["first_order"]) == pytest.approx(4 * math.log(1e4))
    assert float(row["lower_bound"]) <= float(row["first_order"])


def test_estimate_command(capsys):
    code, out, _ = run(capsys, "estimate", "--procedure", "intersection", "--a", "4",
                       "--b", "4", "--K", "4", "--signals", "0,1", "--reps", "500")
    assert code == 0
    rows = rows_of(out)
    assert [r["error_type"] for r in rows] == ["typeI", "typeII"]
    assert all(float(r["error_estimate"]) >= 0 for r in rows)


def test_simulate_command_writes_file(tmp_path, capsys):
    path = tmp_path / "sim.csv"
    code, out, _ = run(capsys, "simulate", "--reps", "5", "--c", "4", "--out", str(path))
    assert code == 0 and out == ""
    rows = rows_of(path.read_text())
    assert len(rows) == 5
    assert all(r["stopped_by"] == "gap" and len(r["decision"].split()) == 1 for r in rows)


def test_calibrate_command_prints_summary(capsys):
    code, out, err = run(capsys, "calibrate", "--procedure", "gap", "--K", "4",
                         "--alpha", "0.02", "--beta", "0.02", "--reps", "1000")
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["c"]) > 0 and "worst-case error" in err


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[panel]\nK = 4\n[procedure]\nkind = gap\nc = 3\n[run]\nreps = 50\n")
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--reps", "7")
    assert code == 0 and len(rows_of(out)) == 7


def test_errors_exit_nonzero(capsys):
    code, _, err = run(capsys, "bound", "--procedure", "gap", "--m", "0")
    assert code != 0 and "error" in err
    code, _, err = run(capsys, "simulate", "--config", "/nonexistent/file.ini")
    assert code != 0
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_figure_sweep_rows():
    cfg = ExperimentConfig(K=4, procedure="intersection", reps=1000, alphas=(1e-2, 1e-3),
                           sizes=(0, 2))
    rows = run_figure_sweep(cfg)
    assert [(r["alpha"], r["size"]) for r in rows] == [(1e-2, 0), (1e-2, 2), (1e-3, 0),
                                                       (1e-3, 2)]
    for r in rows:
        assert r["status"] == "ok"
        assert r["first_order"] == pytest.approx(8 * abs(math.log(r["alpha"])))
        assert r["normalized_ratio"] == pytest.approx(r["ess"] / r["first_order"])
        assert r["conservative_ess"] > r["ess"]


def test_figure_sweep_flags_failed_calibration(monkeypatch):
    from seqmulti import experiments
    from seqmulti.exceptions import CalibrationError

    def broken(*args, **kwargs):
        raise CalibrationError("no bracket")

    monkeypatch.setattr(experiments, "calibrate", broken)
    cfg = ExperimentConfig(K=4, procedure="gap", reps=200, alphas=(1e-2,))
    (row,) = run_figure_sweep(cfg)
    assert row["status"] == "calibration_failed" and math.isnan(row["ess"])


def test_same_seed_same_bytes(capsys):
    args = ("estimate", "--procedure", "gap", "--c", "5", "--reps", "300", "--seed", "5")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]
