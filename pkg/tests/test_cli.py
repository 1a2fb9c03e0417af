"""CLI contract: CSV schema, exit codes, config precedence, determinism."""

import csv
import io
import math

import pytest

from helidisk.cli import main
from helidisk.experiments import CSV_HEADER

PI2 = math.pi**2


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_HEADER
    return rows[1:]


def test_helicity_row(capsys):
    code, out, _ = run_cli(
        capsys, ["helicity", "--field", "linear", "--omega", "1", "--i0", "1", "--grid", "64,64,64"]
    )
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 1
    exp, field, i0, grid, value, err, extra = rows[0]
    assert exp == "helicity" and field == "linear:1" and grid == "64x64x64"
    assert float(value) == pytest.approx(-2 * PI2, abs=1e-8)
    assert float(err) < 1e-9
    assert float(i0) == 1.0


def test_inline_field_spec(capsys):
    code, out, _ = run_cli(capsys, ["helicity", "--field", "linear:0.3"])
    assert code == 0
    assert float(parse_csv(out)[0][4]) == pytest.approx(-0.6 * PI2, abs=1e-8)


def test_seventeen_digit_round_trip(capsys):
    code, out1, _ = run_cli(capsys, ["helicity", "--field", "twist:0.8|-0.3"])
    assert code == 0
    code, out2, _ = run_cli(capsys, ["helicity", "--field", "twist:0.8|-0.3"])
    assert out1 == out2
    value = float(parse_csv(out1)[0][4])
    assert format(value, ".17g") == parse_csv(out1)[0][4]


def test_usage_errors(capsys):
    code, _, err = run_cli(capsys, ["helicity", "--field", "bogus:1"])
    assert code == 2 and "bogus" in err
    code, _, err = run_cli(capsys, ["helicity", "--no-such-flag", "x"])
    assert code == 2
    code, _, err = run_cli(capsys, ["quantize", "--field1", "linear:1"])
    assert code == 2 and "field2" in err
    code, _, err = run_cli(capsys, ["helicity", "--field", "linear"])
    assert code == 2 and "omega" in err


def test_calabi_on_capped_rotation_uses_extended_disk(capsys):
    code, out, _ = run_cli(capsys, ["calabi", "--field", "lemma1:2,0.1", "--i0", "1"])
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row[2]) == pytest.approx(1.1)
    exact = -2 * PI2 * 2 * (1 - 0.1 - 0.1**2 / 3)
    assert float(row[4]) == pytest.approx(exact, abs=1e-9)


def test_numerical_error_exit(capsys):
    code, _, err = run_cli(capsys, ["calabi", "--field", "linear:1"])
    assert code == 3 and "boundary" in err


def test_map_mismatch_exit(capsys):
    code, _, err = run_cli(
        capsys, ["quantize", "--field1", "linear:0.25", "--field2", "linear:0.3"]
    )
    assert code == 3 and "Poincare" in err


def test_lemma1_limit_table(capsys):
    code, out, _ = run_cli(
        capsys, ["lemma1-limit", "--n", "1", "--i0", "1", "--eps", "0.2,0.1,0.05,0.025"]
    )
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 5
    values = [float(r[4]) for r in rows[:4]]
    for v, eps in zip(values, (0.2, 0.1, 0.05, 0.025)):
        assert abs(v + 2 * PI2) <= 5 * eps * 2 * PI2
    fit = rows[4]
    assert fit[0] == "lemma1-limit-fit"
    assert float(fit[4]) >= 0.9


def test_quantize_theorem2(capsys):
    code, out, _ = run_cli(
        capsys,
        ["quantize", "--field1", "linear:0.3", "--field2", "theorem2:linear:0.3,n=2"],
    )
    assert code == 0
    extra = dict(kv.split("=", 1) for kv in parse_csv(out)[0][6].split(";"))
    assert abs(int(extra["n_nearest"])) == 2
    assert float(extra["residual"]) < 1e-5


def test_theorem2_subcommand(capsys):
    code, out, _ = run_cli(
        capsys, ["theorem2", "--field", "linear:0.3", "--n", "1", "--k", "3", "--grid", "32,8,64"]
    )
    assert code == 0
    row = parse_csv(out)[0]
    extra = dict(kv.split("=", 1) for kv in row[6].split(";"))
    assert abs(float(row[4])) == pytest.approx(2 * PI2, rel=1e-6)
    assert float(extra["map_distance"]) < 1e-6
    assert int(extra["smoothness_order"]) >= 3


def test_poincare_rows(capsys):
    code, out, _ = run_cli(capsys, ["poincare", "--field", "zero", "--samples", "5"])
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 5
    for r in rows:
        assert float(r[4]) == 0.0
        extra = dict(kv.split("=", 1) for kv in r[6].split(";"))
        assert extra["p0"] == extra["p1"] and extra["q0"] == extra["q1"]


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("field = linear:1\ni0 = 1\ngrid = 32,16,16\n", encoding="utf-8")
    code, out, _ = run_cli(capsys, ["--config", str(cfg), "helicity"])
    assert code == 0
    assert parse_csv(out)[0][3] == "32x16x16"
    # explicit flag beats the config value
    code, out, _ = run_cli(capsys, ["--config", str(cfg), "helicity", "--field", "linear:0.5"])
    assert code == 0
    assert parse_csv(out)[0][1] == "linear:0.5"
    code, _, err = run_cli(capsys, ["--config", str(tmp_path / "missing.cfg"), "helicity"])
    assert code == 2


def test_out_file_lf_endings(tmp_path, capsys):
    out_path = tmp_path / "rows.csv"
    code, out, _ = run_cli(
        capsys, ["--out", str(out_path), "helicity", "--field", "linear:1"]
    )
    assert code == 0 and out == ""
    data = out_path.read_bytes()
    assert b"\r" not in data
    assert data.decode("utf-8").startswith("experiment,field,")


def test_linking_subcommand_deterministic(capsys):
    argv = ["linking", "--field", "zero", "--periods", "4", "--pairs", "16", "--seed", "5"]
    code, out1, _ = run_cli(capsys, argv)
    assert code == 0
    code, out2, _ = run_cli(capsys, argv)
    assert out1 == out2
    assert float(parse_csv(out1)[0][4]) == 0.0


def test_workers_env_default(capsys, monkeypatch):
    monkeypatch.setenv("HELICITY_WORKERS", "2")
    argv = ["linking", "--field", "zero", "--periods", "4", "--pairs", "16", "--seed", "5"]
    code, out_env, _ = run_cli(capsys, argv)
    assert code == 0
    monkeypatch.delenv("HELICITY_WORKERS")
    code, out_one, _ = run_cli(capsys, argv)
    assert out_env == out_one  # worker count must not change results
    monkeypatch.setenv("HELICITY_WORKERS", "zero")
    code, _, _ = run_cli(capsys, argv)
    assert code == 2


def test_selftest_subset(capsys):
    code = main(["selftest", "--criteria", "1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS criterion 1" in out
    code = main(["selftest", "--criteria", "0"])
    assert code == 2
