import csv

import pytest
from openpyxl import load_workbook

from divisorlab import checks
from divisorlab.cli import run
from divisorlab.laurent import DEFAULT_STIELTJES
from divisorlab.models import RunConfig, ScanReport


def _lines(capsys):
    return capsys.readouterr().out.strip().splitlines()


def test_main_term_k2(capsys):
    assert run(["main-term", "--k", "2"]) == 0
    header, row = _lines(capsys)
    assert header == "L^1, L^0"
    lead, const = (float(v) for v in row.split(", "))
    assert lead == pytest.approx(1.0)
    assert const == pytest.approx(2 * DEFAULT_STIELTJES.gamma[0] - 1, abs=1e-15)


def test_ramanujan(capsys):
    assert run(["ramanujan", "--q", "6", "--h", "4"]) == 0
    assert _lines(capsys) == ["c_q(h)", "-1"]


def test_dk_range_and_point(capsys):
    assert run(["dk", "--k", "3", "--lo", "1", "--hi", "4"]) == 0
    assert _lines(capsys) == ["n, d_3(n)", "1, 1", "2, 3", "3, 3", "4, 6"]
    assert run(["dk", "--k", "3", "--n", "12"]) == 0
    assert _lines(capsys)[-1] == "12, 18"


@pytest.mark.parametrize(
    "argv",
    [
        ["ramanujan", "--q", "0", "--h", "1"],
        ["avg-delta", "--k", "3", "--N", "10", "--H", "20"],
        ["main-term", "--k", "9"],
        ["no-such-command"],
        ["dk", "--k", "3"],
        ["avg-delta", "--k", "3", "--N", "100", "--H", "5", "--theta", "0.5"],
        ["avg-delta", "--k", "3", "--N", "100", "--H", "0"],
        ["delta", "--k", "2", "--N", "100", "--h", "0"],
        ["singular", "--k", "3", "--x", "1.5", "--h", "1"],
        ["ramanujan", "--q", "6", "--h", "0"],
        ["scan", "--k", "7", "--theta", "0.5"],
        ["scan", "--k", "3", "--theta", "0.5", "1.5"],
        ["beta", "--k", "2", "--xmin", "1000", "--xmax", "4000"],
        ["ramanujan", "--q", "6", "--h", "4", "--format", "xlsx"],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().out == ""


def test_usage_error_names_the_flag(capsys):
    run(["ramanujan", "--q", "0", "--h", "1"])
    assert "--q" in capsys.readouterr().err


def test_oversized_table_is_a_computation_error(capsys):
    assert run(["dk", "--k", "2", "--lo", "1", "--hi", "300000000"]) == 1
    assert "exceeds the bound" in capsys.readouterr().err


def test_xlsx_needs_output(capsys):
    assert run(["ramanujan", "--q", "6", "--h", "4", "--format", "xlsx"]) == 2
    assert "--format xlsx needs --output" in capsys.readouterr().err


def test_scan_without_default_beta_names_the_flag(capsys):
    assert run(["scan", "--k", "7", "--theta", "0.5"]) == 2
    assert "--beta is required for k=7" in capsys.readouterr().err


def test_xlsx_output(tmp_path):
    path = tmp_path / "dk.xlsx"
    assert run(["dk", "--k", "2", "--lo", "1", "--hi", "12", "--format", "xlsx", "--output", str(path)]) == 0
    sheet = load_workbook(path).active
    rows = list(sheet.iter_rows(values_only=True))
    assert rows[0] == ("n", "d_2(n)")
    assert rows[12] == (12, 6)


def test_csv_output_file(tmp_path, capsys):
    path = tmp_path / "q.csv"
    assert run(["qpoly", "--k", "2", "--q", "1", "--output", str(path)]) == 0
    assert capsys.readouterr().out == ""
    header, row = path.read_text(encoding="utf-8").strip().splitlines()
    assert header == "L^1, L^0"
    assert float(row.split(", ")[0]) == pytest.approx(1.0)


def test_gnuplot_output(capsys):
    assert run(["delta", "--k", "2", "--N", "500", "--h", "3", "--q-max", "20", "--format", "gnuplot-data"]) == 0
    lines = _lines(capsys)
    assert lines[0] == "# delta"
    assert lines[1].startswith("# ")
    assert len(lines) == 3


def test_scan_json(capsys):
    argv = ["scan", "--k", "3", "--theta", "0.5", "--nmin", "1024", "--nmax", "8192", "--q-max", "100", "--format", "json"]
    assert run(argv) == 0
    report = ScanReport.model_validate_json(capsys.readouterr().out)
    assert [row.N for row in report.rows] == [1024, 2048, 4096, 8192]


def test_scan_several_thetas(capsys):
    argv = ["scan", "--k", "2", "--theta", "0.4", "0.6", "--nmin", "1024", "--nmax", "8192", "--q-max", "30", "--format", "json"]
    assert run(argv) == 0
    report = ScanReport.model_validate_json(capsys.readouterr().out)
    assert report.config.h_rules == ["theta=0.4", "theta=0.6"]
    assert [fit.h_rule for fit in report.fitted_slopes] == ["theta=0.4", "theta=0.6"]
    assert len(report.rows) == 8


def test_decompose_theta(capsys):
    assert run(["decompose", "--k", "2", "--N", "1000", "--theta", "0.5"]) == 0
    header, row = _lines(capsys)
    values = dict(zip(header.split(", "), row.split(", ")))
    assert int(values["H"]) == 32
    assert float(values["relative_residual"]) <= 1e-6


def test_verify_exit_codes(monkeypatch, capsys):
    monkeypatch.setattr(checks, "CHECKS", [("passes", lambda quick: (True, "fine"))])
    assert run(["verify", "--quick"]) == 0
    monkeypatch.setattr(checks, "CHECKS", [("passes", lambda quick: (True, "fine")), ("fails", lambda quick: (False, "off"))])
    assert run(["verify", "--quick"]) == 1
    assert "fails, false, off" in capsys.readouterr().out


def test_verify_csv_reads_back(monkeypatch, capsys):
    detail = "D_3(300) table 6333, tuple count 6333"
    monkeypatch.setattr(checks, "CHECKS", [("divisor table", lambda quick: (True, detail))])
    assert run(["verify", "--quick"]) == 0
    header, row = csv.reader(_lines(capsys), skipinitialspace=True)
    assert header == ["check", "ok", "detail", "seconds"]
    assert row[:3] == ["divisor table", "true", detail]
    assert float(row[3]) >= 0.0


def test_scan_defaults_to_the_theta_set():
    cfg = RunConfig(command="scan", k=3)
    assert [rule.label for rule in cfg.h_rules()] == ["theta=0.4", "theta=0.5", "theta=0.6", "theta=0.7", "theta=0.8"]
    assert [rule.label for rule in RunConfig(command="scan", k=3, H=40).h_rules()] == ["H=40"]
