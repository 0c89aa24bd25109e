"""CLI: expression grammar, suite orchestration, report determinism."""

import json
import os
from pathlib import Path

import pytest

from fedosov_lab.scalars import Scalar, rat
from fedosov_lab.expressions import ParseError, parse_expression, print_chart_function
from fedosov_lab.cli import (
    ConfigError,
    Report,
    ReportRow,
    SuiteConfig,
    emit_report,
    load_config_file,
    main,
    parse_levels,
    run_suite,
)

GOLDEN = Path(__file__).parent / "golden"

MU3 = "1/4 pi^-1 (1 - z zbar) D^-1"


# -- expression grammar -------------------------------------------------------


def test_parse_examples(cp1):
    ring = cp1.ring
    f = parse_expression("z*zbar", ring)
    assert f == ring.var_z() * ring.var_zbar()
    assert f.dpow == 0
    g = parse_expression("z*zbar * D^-1", ring)
    assert g.num == {((1,), (1,)): Scalar.one()}
    assert g.dpow == 1
    c = parse_expression("1/3 + 1/2 i", ring)
    assert c == ring.const(Scalar.of(rat(1, 3), rat(1, 2)))


def test_parse_round_trip(cp1):
    ring = cp1.ring
    cases = [
        "z*zbar",
        "(1 - z zbar) D^-1",
        MU3,
        "-2*zbar*D^-2 + 1/7",
        "i z^3 - zbar",
    ]
    for text in cases:
        f = parse_expression(text, ring)
        assert parse_expression(print_chart_function(f), ring) == f


def test_parse_errors(cp1):
    ring = cp1.ring
    with pytest.raises(ParseError):
        parse_expression("z^-1", ring)  # only D and pi take negative powers
    with pytest.raises(ParseError):
        parse_expression("q + 1", ring)
    with pytest.raises(ParseError):
        parse_expression("(z", ring)
    with pytest.raises(ParseError):
        parse_expression("z ^ 1/2", ring)
    err = None
    try:
        parse_expression("z + $", ring)
    except ParseError as exc:
        err = exc
    assert err is not None and err.pos == 4


def test_parse_levels():
    assert parse_levels("1..4") == (1, 2, 3, 4)
    assert parse_levels("8,16,32") == (8, 16, 32)
    assert parse_levels("") == ()


# -- config -------------------------------------------------------------------


def test_config_file_and_validation(tmp_path):
    path = tmp_path / "suite.cfg"
    path.write_text("# demo\ngeometry = cp1-fs\norder = 6\nsuites = flatness\n")
    values = load_config_file(str(path))
    assert values == {"geometry": "cp1-fs", "order": "6", "suites": "flatness"}
    cfg = SuiteConfig(levels=(3, 2))
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = SuiteConfig(suites=("nope",))
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = SuiteConfig(suites=("asymptotics",), levels=(2, 4), f="z", g="z")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_emit_formats():
    report = Report(version="x", config={"a": 1}, rows=[
        ReportRow("s", "c", "pass", "1/2*pi^-1", 3),
    ])
    doc = json.loads(emit_report(report, "json"))
    assert doc["rows"][0]["defect"] == "1/2*pi^-1"
    csv_text = emit_report(report, "csv").decode()
    assert csv_text.splitlines()[0] == "suite,case,status,defect"
    md = emit_report(report, "md").decode()
    assert "| 1/2*pi^-1 |" in md
    with pytest.raises(ConfigError):
        emit_report(report, "xml")


# -- run_suite ---------------------------------------------------------------


def test_run_suite_determinism():
    cfg = SuiteConfig(suites=("flatness", "tuynman"), levels=(1, 2), order=4)
    r1 = run_suite(cfg)
    r2 = run_suite(cfg)
    def normal(report):
        doc = json.loads(emit_report(report, "json"))
        for row in doc["rows"]:
            row["runtime_ms"] = 0
        return doc
    assert normal(r1) == normal(r2)
    assert r1.exit_code() == 0


def test_run_suite_row_counts():
    cfg = SuiteConfig(suites=("diagram",), levels=(1, 2, 3, 4, 5), order=4)
    report = run_suite(cfg)
    assert len(report.rows) == 15  # 3 generators x 5 levels
    assert all(r.status == "pass" for r in report.rows)


def test_run_suite_not_killing_error_row():
    cfg = SuiteConfig(suites=("classify",), f0="(z^2+zbar^2) z zbar", order=4)
    report = run_suite(cfg)
    assert len(report.rows) == 1
    assert report.rows[0].status == "error"
    assert "not-Killing" in report.rows[0].defect
    assert report.exit_code() == 1


def test_threads_env_determinism(monkeypatch):
    cfg = SuiteConfig(suites=("su2",), levels=(1, 2, 3), order=4)
    monkeypatch.setenv("FEDOSOV_LAB_THREADS", "1")
    rows1 = [(r.suite, r.case, r.status, r.defect) for r in run_suite(cfg).rows]
    monkeypatch.setenv("FEDOSOV_LAB_THREADS", "3")
    rows3 = [(r.suite, r.case, r.status, r.defect) for r in run_suite(cfg).rows]
    assert rows1 == rows3


# -- main() exit codes and outputs --------------------------------------------


def test_main_star_product(capsys):
    rc = main(["star-product", "--geometry", "flat:1", "--alpha", "zero",
               "--order", "4", "--f", "z", "--g", "zbar"])
    out = capsys.readouterr().out
    assert rc == 0
    doc = json.loads(out)
    assert doc["order_0"] == "1*z*zbar"
    assert doc["order_1"] == "-1"


def test_main_classify(capsys):
    rc = main(["classify-degree1", "--geometry", "cp1-fs", "--order", "4", "--f0", MU3])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert doc == {"killing": True, "ybar_degree": 1, "hbar_degree": 1,
                   "verdict": "degree-1"}
    rc = main(["classify-degree1", "--geometry", "cp1-fs", "--order", "4",
               "--f0", "(z^2+zbar^2) z zbar"])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 1
    assert doc["verdict"] == "not-Killing"


def test_main_config_errors(capsys):
    assert main(["bt-asymptotics", "--f", "z", "--g", "z", "--levels", "4,8"]) == 2
    assert main(["report", "--format", "xml"]) == 2
    assert main(["bt-verify", "--levels", "5..1"]) == 2
    capsys.readouterr()


def test_main_bt_verify_csv(capsys):
    rc = main(["bt-verify", "--levels", "1..2", "--suite", "tuynman",
               "--order", "4", "--format", "csv"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0] == "suite,case,status,defect"
    assert len(lines) == 7  # header + 3 generators x 2 levels


def test_main_flag_overrides_config(tmp_path, capsys):
    cfgfile = tmp_path / "r.cfg"
    cfgfile.write_text("suites = flatness\nformat = md\norder = 4\n")
    rc = main(["report", "--config", str(cfgfile), "--format", "csv"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("suite,case,status,defect")


def test_main_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    rc = main(["flatness-check", "--order", "4", "--out", str(target)])
    assert rc == 0
    doc = json.loads(target.read_text())
    assert doc["rows"][0]["status"] == "pass"
    capsys.readouterr()


def test_jet_geometry_cli(tmp_path, capsys):
    jet = tmp_path / "flatpot.jet"
    jet.write_text("n = 1\norder = 4\nterm 1 1 -1\n")
    rc = main(["flatness-check", "--geometry", f"jet:{jet}", "--alpha", "zero",
               "--order", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    doc = json.loads(out)
    assert doc["rows"][0]["status"] == "pass"
    bad = tmp_path / "bad.jet"
    bad.write_text("n = 1\nterm 1 -1\n")
    assert main(["flatness-check", "--geometry", f"jet:{bad}"]) == 2
    capsys.readouterr()


def test_golden_report(tmp_path):
    """Byte-exact golden comparison, runtime fields normalised to zero."""
    cfg = SuiteConfig(suites=("flatness", "tuynman", "commutator"),
                      levels=(1, 2), order=4)
    report = run_suite(cfg)
    for row in report.rows:
        row.runtime_ms = 0
    got = emit_report(report, "json")
    golden_path = GOLDEN / "report_small.json"
    assert got == golden_path.read_bytes()
    got_csv = emit_report(report, "csv")
    assert got_csv == (GOLDEN / "report_small.csv").read_bytes()
