import json

from nhdyn.cli import main
from nhdyn.scenarios import read_csv


def test_model_b_to_stdout(capsys):
    code = main(["model-b", "--gamma", "1.5", "--t-max", "2", "--sample-dt", "1", "--methods", "metric,nj"])
    out = capsys.readouterr().out
    rows, meta = read_csv(out)
    assert code == 0
    assert {r.method for r in rows} == {"metric", "nj"}
    assert len(rows) == 6
    assert meta[0].startswith("nhdyn")


def test_out_file_and_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"t_max": 1.0, "sample_dt": 0.5, "methods": ["me"]}))
    out = tmp_path / "o.csv"
    assert main(["model-a", "--config", str(cfg), "--out", str(out), "--initial", "amp:0,0,1,0"]) == 0
    rows, _ = read_csv(out.read_text())
    assert len(rows) == 3 and capsys.readouterr().out == ""


def test_config_error_exit_code(capsys):
    assert main(["model-b", "--dt", "0.3"]) == 2
    assert "dt" in capsys.readouterr().err
    assert main(["sweep", "--k-grid", "1,-1"]) == 2


def test_usage_error_exit_code(capsys):
    try:
        main(["model-b", "--bogus"])
    except SystemExit as exc:
        assert exc.code == 2
    else:
        raise AssertionError("expected SystemExit")


def test_numerical_failure_exit_code(capsys):
    assert main(["model-a", "--gamma", "5", "--dt", "0.5", "--t-max", "10", "--sample-dt", "0.5",
                 "--initial", "bloch:0,0,1", "--methods", "me"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_sweep_reports_check_status(capsys):
    code = main(["sweep", "--k-grid", "0.5,-0.5", "--t-start", "-2", "--t-max", "2", "--sample-dt", "1"])
    out = capsys.readouterr().out
    assert code in (0, 1)
    assert "check metric_sz_even: PASS" in out


def test_verify_with_degraded_step_fails(capsys):
    from nhdyn import verify

    # run only the property suites to keep the test fast
    original = verify.CHECKS
    verify.CHECKS = tuple(c for c in original if c[0].startswith("8 "))
    try:
        code = main(["verify", "--dt", "0.5"])
    finally:
        verify.CHECKS = original
    out = capsys.readouterr().out
    assert code == 1
    assert "norm FAIL" in out
