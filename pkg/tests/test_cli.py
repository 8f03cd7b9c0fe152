import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from triinterp.cli import ReportError, build_parser, dispatch, render_report, write_report

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("argv,golden", [
    (["metrics", "0", "0", "1", "0", "0", "1"], "metrics.csv"),
    (["interp-error", "0", "0", "1", "0", "0.2", "0.05", "--k", "2", "--m", "1", "--field", "sinsin"],
     "interp_error.csv"),
    (["bconst", "0", "0", "1", "0", "0", "1", "--m", "1", "--k", "1", "--format", "json"], "bconst.json"),
    (["squeeze", "--m", "2", "--k", "2", "--p", "1", "--alphas", "1,0.1", "--samples", "200"], "squeeze.csv"),
    (["fem", "--q", "1.2", "--n", "4,8"], "fem.csv"),
])
def test_golden(capsys, argv, golden):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert out == (GOLDEN / golden).read_text()


def test_family_golden(capsys, tmp_path):
    rows = tmp_path / "rows.csv"
    code, out, _ = run(capsys, "family", "--alpha", "1.5", "--beta", "2.2", "--k", "1", "--m", "1", "--p", "2",
                       "--hmin", "2e-3", "--out", str(rows))
    assert code == 0
    assert out == (GOLDEN / "family_summary.json").read_text()
    assert rows.read_text() == (GOLDEN / "family_rows.csv").read_text()
    summary = json.loads(out)
    # coarse range (h down to 2^-8) is still pre-asymptotic; the full range is checked in acceptance
    assert summary["fitted_rate"] == pytest.approx(0.3, abs=0.1)
    assert summary["standard_convergent"] is False


def test_metrics_values(capsys):
    code, out, _ = run(capsys, "metrics", "0", "0", "1", "0", "0", "1")
    header, row = out.splitlines()
    rec = dict(zip(header.split(","), map(float, row.split(","))))
    assert rec["R"] == pytest.approx(0.7071068, abs=1e-7)


@pytest.mark.parametrize("argv", [
    ["family", "--alpha", "1.5", "--beta", "2.8"],
    ["metrics", "0", "0", "1", "1", "2", "2"],
    ["metrics", "0", "0", "x", "0", "0", "1"],
    ["bogus"],
    ["bconst", "0", "0", "1", "0", "0", "1", "--m", "3", "--k", "1"],
    ["squeeze", "--alphas", "0.5,2"],
    ["fem", "--q", "0.5"],
    ["interp-error", "0", "0", "1", "0", "0", "1", "--p", "0.5"],
    ["--quad-bump", "-1", "metrics", "0", "0", "1", "0", "0", "1"],
])
def test_validation_exit_code(capsys, argv):
    assert dispatch(argv) == 2


def test_numeric_failure_exit_code(capsys, monkeypatch):
    import triinterp.cli as cli
    from triinterp.fem import CGConvergenceError

    def boom(*a, **k):
        raise CGConvergenceError(10, 0.5)

    monkeypatch.setattr(cli, "convergence_study", boom)
    assert dispatch(["fem"]) == 1
    assert "numerical failure" in capsys.readouterr().err


def test_determinism_files(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert dispatch(["squeeze", "--alphas", "1,0.5", "--p", "3", "--samples", "100", "--seed", "4",
                         "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_quad_bump_flag(capsys, monkeypatch):
    monkeypatch.delenv("TRIINTERP_QUAD_BUMP", raising=False)
    code, out, _ = run(capsys, "--quad-bump", "4", "interp-error", "0", "0", "1", "0", "0", "1", "--field", "exp")
    assert code == 0
    monkeypatch.delenv("TRIINTERP_QUAD_BUMP", raising=False)
    code, ref, _ = run(capsys, "interp-error", "0", "0", "1", "0", "0", "1", "--field", "exp")
    err = lambda text: float(dict(zip(*[l.split(",") for l in text.splitlines()]))["error"])  # noqa: E731
    assert err(out) == pytest.approx(err(ref), rel=1e-12)


def test_report_formats(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": math.nan, "d": True}]
    assert render_report(rows) == "a,b,c,d\n1,0.10000000000000001,nan,true\n"
    text = render_report(rows, "json")
    assert text == '{"a": 1, "b": 0.10000000000000001, "c": null, "d": true}\n'
    assert json.loads(text)["b"] == 0.1
    two = render_report(rows * 2, "json")
    assert [list(r) for r in json.loads(two)] == [["a", "b", "c", "d"]] * 2
    with pytest.raises(ReportError):
        render_report([])
    with pytest.raises(ReportError):
        render_report(rows, "xml")
    with pytest.raises(ReportError):
        write_report(rows, tmp_path / "missing" / "x.csv")
    path = tmp_path / "one.csv"
    write_report(rows[0], path)
    assert len(path.read_text().splitlines()) == 2


def test_help_lists_flags():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, sp in sub.choices.items():
        for action in sp._actions:
            if action.dest != "help":
                assert action.help, f"{name}: {action.dest} has no help text"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "triinterp.cli", "family", "--alpha", "1.5", "--beta", "2.8"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "triinterp.cli", "metrics", "0", "0", "1", "0", "0", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "metrics.csv").read_text()
