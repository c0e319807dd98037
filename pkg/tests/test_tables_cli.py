import hashlib
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistuntwist import cli, closed_forms as cf
from twistuntwist.tables import SweepTable, emit, read_csv, read_json, to_csv_text

FINITE = st.floats(allow_nan=False, allow_infinity=False)


def test_table_is_rectangular():
    with pytest.raises(ValueError):
        SweepTable(["a", "b"], [[1.0]])
    t = SweepTable(["a"])
    with pytest.raises(ValueError):
        t.append([1, 2])


def test_empty_table_is_header_only(tmp_path):
    path = emit(SweepTable(["x", "y"]), tmp_path / "e.csv")
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert lines == ["x,y"]
    assert read_csv(path).rows == []


@given(row=st.lists(FINITE, min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_csv_round_trip_is_bit_exact(tmp_path_factory, row):
    cols = [f"c{i}" for i in range(len(row))]
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    emit(SweepTable(cols, [row]), path)
    back = read_csv(path).rows[0]
    assert [float(v).hex() for v in back] == [float(v).hex() for v in row]


def test_json_round_trip_with_nan(tmp_path):
    t = SweepTable(["x", "value"], [[0.1, math.nan], [0.2, 1.5]], {"note": "n"})
    path = emit(t, tmp_path / "t.json", "json")
    payload = json.loads(path.read_text())
    assert payload["rows"][0][1] is None
    assert set(payload) == {"columns", "rows", "meta"}
    back = read_json(path)
    assert math.isnan(back.rows[0][1]) and back.rows[1] == [0.2, 1.5]


def test_csv_provenance_header():
    text = to_csv_text(SweepTable(["x"], [[1.0]], {"config_sha256": "abc"}))
    assert text.startswith("# tool: twistuntwist")
    assert "# config_sha256: abc" in text
    with pytest.raises(ValueError):
        emit(SweepTable(["x"]), "unused", "xml")


# ---------------------------------------------------------------------------
# command line


def run(tmp_path, argv, config=None):
    args = list(argv)
    if config is not None:
        cfg = tmp_path / "run.cfg"
        cfg.write_text(config)
        args += ["--config", str(cfg)]
    return cli.main(args)


def data_lines(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_config_parsing():
    values = cli.parse_config_text("# comment\nobjective = f_ratio  # trailing\n\naxis.chi_t = 0.1, 0.2, 3\n")
    assert values == {"objective": "f_ratio", "axis.chi_t": "0.1, 0.2, 3"}
    with pytest.raises(cli.ConfigError):
        cli.parse_config_text("no equals sign")
    with pytest.raises(cli.ConfigError):
        cli.parse_config_text("a = 1\na = 2")


@pytest.mark.parametrize(
    "config,field",
    [
        ("objective = f_ratio\nbogus = 1\n", "bogus"),
        ("objective = nope\naxis.x = 0, 1, 2\n", "objective"),
        ("objective = f_ratio\naxis.chi_t = 0.1, 0.2, 3\n", "param.n"),
        ("objective = f_ratio\nparam.n = 2.5\naxis.chi_t = 0.1, 0.2, 3\n", "param.n"),
        ("objective = f_ratio\nparam.n = 100\naxis.chi_t = 0.1, 0.2\n", "axis.chi_t"),
        ("objective = f_ratio\nparam.n = 100\naxis.q = 0.1, 0.2, 3\n", "axis.q"),
        ("objective = f_ratio\nparam.n = 1\naxis.chi_t = 0.1, 0.2, 3\n", "param.n"),
        ("objective = f_ratio\nparam.n = 10\naxis.chi_t = 0.1, 0.2, 3\nseed = -4\n", "seed"),
    ],
)
def test_config_errors_name_the_field(config, field):
    with pytest.raises(cli.ConfigError) as info:
        cli.validate("sweep", cli.parse_config_text(config))
    assert info.value.field == field


def test_config_error_exit_code(tmp_path, capsys):
    assert run(tmp_path, ["sweep"], "objective = f_ratio\nbogus = 1\n") == cli.EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err
    assert run(tmp_path, ["verify", "thm1", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    assert run(tmp_path, ["figure", "fig3"], "k_max = 8\n") == cli.EXIT_CONFIG
    assert run(tmp_path, ["figure", "fig2"], "target = fig3\n") == cli.EXIT_CONFIG


def test_fig2_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(tmp_path, ["figure", "fig2", "--out", str(a)]) == 0
    assert run(tmp_path, ["figure", "fig2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = data_lines(a)
    assert lines[0] == "chi_t,f"
    chi, f = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).T
    assert np.allclose(f, cf.f_ratio(1000, chi), rtol=1e-14, atol=0)


def test_header_hash_matches_resolved_config(tmp_path):
    out = tmp_path / "f.csv"
    run(tmp_path, ["figure", "fig2", "--out", str(out)], "steps = 11\n")
    header = dict(
        ln[2:].split(": ", 1) for ln in out.read_text().splitlines() if ln.startswith("# ")
    )
    config = "".join(
        f"{k[7:]} = {v}\n" for k, v in sorted(header.items()) if k.startswith("config.")
    )
    canonical = "".join(sorted((config + "command = figure\n").splitlines(keepends=True)))
    assert hashlib.sha256(canonical.encode()).hexdigest() == header["config_sha256"]
    assert header["config.steps"] == "11"


def test_fig3_columns(tmp_path):
    out = tmp_path / "f3.csv"
    assert run(tmp_path, ["figure", "fig3", "--out", str(out)], "steps = 4\n") == 0
    lines = data_lines(out)
    assert lines[0] == "chi_t,k,kind,inverse_normalized_error"
    rows = [ln.split(",") for ln in lines[1:]]
    assert {r[2] for r in rows} == {"projected", "squared_projector"}
    assert {int(r[1]) for r in rows} == {1, 2, 3, 4, 5}
    assert len(rows) == 2 * 5 * 4


def test_sweep_threads_do_not_change_output(tmp_path):
    config = "objective = two_param_error\nparam.n = 500\naxis.a1 = -0.2, 0, 9\naxis.a2 = -0.1, 0.1, 5\n"
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(tmp_path, ["sweep", "--format", "json", "--out", str(a)], config) == 0
    assert run(tmp_path, ["sweep", "--format", "json", "--threads", "3", "--out", str(b)], config) == 0
    assert a.read_bytes() == b.read_bytes()
    payload = json.loads(a.read_text())
    assert payload["columns"] == ["a1", "a2", "value", "flag"]
    assert len(payload["rows"]) == 45


def test_optimize_command(tmp_path):
    config = "objective = thm1_scaled\nparam.n = 100000\naxis.c1 = -3, -0.05, 25\naxis.c2 = -3, 3, 25\nstart = -0.5, 0.5\n"
    out = tmp_path / "o.csv"
    assert run(tmp_path, ["optimize", "--out", str(out)], config) == 0
    lines = data_lines(out)
    assert lines[0] == "c1,c2,value,grid_value,converged,evaluations"
    c1, c2, value = (float(x) for x in lines[1].split(",")[:3])
    assert (c1, c2) == pytest.approx((-1, 1), abs=0.01)
    assert value == pytest.approx(math.e, rel=0.01)


def test_optimize_reports_non_convergence(tmp_path):
    config = "objective = thm1_scaled\nparam.n = 100000\naxis.c1 = -3, -0.05, 5\naxis.c2 = -3, 3, 5\nmax_evaluations = 3\n"
    assert run(tmp_path, ["optimize", "--out", str(tmp_path / "o.csv")], config) == cli.EXIT_NONCONVERGENCE


def test_verify_exit_codes(tmp_path):
    ok = tmp_path / "ok.json"
    assert run(tmp_path, ["verify", "prop2", "--out", str(ok)], "schedule = 6, 8, 10\n") == 0
    report = json.loads(ok.read_text())
    assert report["passed"] is True and report["which"] == "prop2"
    assert report["meta"]["config.schedule"] == "6, 8, 10"
    # f(1/N) tends to 1/2, so the stated limit of 1 fails and verify signals it
    bad = tmp_path / "bad.csv"
    assert run(tmp_path, ["verify", "prop1", "--format", "csv", "--out", str(bad)]) == cli.EXIT_VERIFY
    assert "f_at_inverse_n_within_1pct,0" in data_lines(bad)
