import json
import subprocess
import sys
from pathlib import Path

import pytest

from asiantheta import cli

GOLDEN = Path(__file__).parent / "golden"
MARKET = ["--spot", "100", "--strike", "100", "--rate", "0.09", "--drift", "0.09", "--sigma", "0.3", "--expiry", "1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moments_json(capsys):
    code, out, _ = run(capsys, "moments", "--nu", "1", "--h", "0.0225", "--terms", "3", "--format", "json")
    assert code == 0
    body = json.loads(out)
    assert set(body) == {"config", "results", "diagnostics", "residuals"}
    rows = body["results"]["rows"]
    assert [r["n"] for r in rows] == [1, 2, 3]
    assert rows[0]["m_n"].startswith("43.78372691851")
    assert isinstance(rows[0]["m_n"], str)
    assert body["diagnostics"]["n_star"] == 0


def test_theta_csv(capsys):
    code, out, _ = run(capsys, "theta", "--nu", "1", "--h", "0.0225", "--terms", "2", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,Theta_n,n_c,n_d"
    assert lines[1].startswith("1,44.27907495468")


def test_price_market_block_text(capsys):
    code, out, _ = run(capsys, "price", *MARKET, "--c", "6", "--terms", "3")
    assert code == 0
    assert "price_normalized" in out and "price_money" in out
    assert out.splitlines()[0].split() == ["n", "C_n", "Delta_n", "C_n_BS", "Delta_n_BS"]


def test_price_degenerate_route(capsys):
    code, out, _ = run(capsys, "price", "--nu", "1", "--h", "0.0225", "--q", "-0.01", "--format", "json")
    assert code == 0
    body = json.loads(out)
    assert body["results"]["series"] == "closed-form"
    assert len(body["results"]["rows"]) == 1


def test_price_domain_error_exit_2(capsys):
    code, _, err = run(capsys, "price", *MARKET, "--c", "25")
    assert code == 2
    assert "qc < 1/2" in err


def test_price_non_convergence_exit_3(capsys):
    code, out, _ = run(capsys, "price", *MARKET, "--c", "6", "--terms", "3", "--tol", "1e-30", "--format", "json")
    assert code == 3
    assert json.loads(out)["diagnostics"]["converged"] is False


def test_price_converged_exit_0(capsys):
    code, out, _ = run(capsys, "price", *MARKET, "--c", "22", "--terms", "25", "--tol", "1e-8", "--format", "json")
    assert code == 0
    assert json.loads(out)["diagnostics"]["converged"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["price", "--bogus"],
        ["price", *MARKET, "--nu", "1", "--c", "6"],
        ["price", "--spot", "100", "--c", "6"],
        ["price", "--nu", "1", "--h", "0.0225"],
        ["moments"],
        ["price", *MARKET],
        ["price", *MARKET, "--c", "6", "--alpha", "0.5"],
        ["tables", "5"],
        ["price", "--config", "/nonexistent/file"],
    ],
)
def test_validation_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith("error:")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# worked example\nnu = 1\nh = 0.0225\nterms = 4\nformat = csv\n")
    code, out, _ = run(capsys, "moments", "--config", str(cfg), "--terms", "2")
    assert code == 0
    assert len(out.splitlines()) == 3


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nu 1\n")
    code, _, _ = run(capsys, "moments", "--config", str(cfg))
    assert code == 1


def test_out_file(tmp_path, capsys):
    target = tmp_path / "m.csv"
    code, out, _ = run(capsys, "moments", "--nu", "1", "--h", "0.0225", "--terms", "1", "--format", "csv",
                       "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("n,m_n,")


@pytest.mark.parametrize("which", [1, 2])
def test_tables_match_golden_files_byte_for_byte(capsys, which):
    code, out, _ = run(capsys, "tables", str(which), "--format", "csv")
    assert code == 0
    assert out == (GOLDEN / f"table{which}.csv").read_text()


def test_csv_is_byte_stable(capsys):
    first = run(capsys, "tables", "3", "--format", "csv")[1]
    second = run(capsys, "tables", "3", "--format", "csv")[1]
    assert first == second


def test_check_failure_exit_1(monkeypatch, capsys):
    mp = cli.PrecisionContext(50).mp
    monkeypatch.setattr(cli, "run_checks", lambda args, ctx: [("fake", False, mp.one, mp.zero)])
    code, out, _ = run(capsys, "check", "--format", "json")
    assert code == 1
    assert json.loads(out)["residuals"]["fake"]["passed"] is False


@pytest.mark.parametrize("extra", [["--digits", "50"], ["--nu", "4"]])
def test_check_passes(capsys, extra):
    code, out, _ = run(capsys, "check", *extra, "--skip-density", "--paths", "20000", "--terms", "30",
                       "--format", "json")
    body = json.loads(out)
    failed = [k for k, v in body["residuals"].items() if not v["passed"]]
    assert code == 0, failed
    assert "first_moment_vs_integral" in body["residuals"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "asiantheta", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
