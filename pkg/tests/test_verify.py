import numpy as np

from nhdyn.verify import (
    CHECKS,
    CheckResult,
    VerifyReport,
    _run,
    check_property_suites,
    run_check,
    suite_norm_conservation,
    suite_rk4_order,
)


def test_crashing_check_is_reported_not_raised():
    def boom():
        raise RuntimeError("nope")

    res = _run("x", boom)
    assert not res.passed and "RuntimeError" in res.detail


def test_informational_entries_do_not_fail_report():
    rep = VerifyReport([CheckResult("a", True, ""), CheckResult("note", False, "", informational=True)])
    assert rep.passed and rep.exit_status == 0
    rep = VerifyReport([CheckResult("a", False, "")])
    assert rep.exit_status == 1
    assert rep.lines()[-1] == "summary: 1 checks, 1 failed"


def test_hermitian_map_note_is_informational():
    res = run_check(9)
    assert res.informational and res.passed
    assert "mismatch" in res.detail


def test_degraded_step_fails_norm_conservation():
    ok, detail = suite_norm_conservation(np.random.default_rng(0), 20, dt=0.5)
    assert not ok
    ok, _ = check_property_suites(dt=0.5, n_cases=20)
    assert not ok


def test_norm_and_rk4_suites_pass_at_default_step():
    assert suite_norm_conservation(np.random.default_rng(0), 20)[0]
    assert suite_rk4_order(np.random.default_rng(0), 50)[0]


def test_checks_are_deterministic():
    a, b = run_check(7), run_check(7)
    assert a.passed and a.detail == b.detail


def test_check_table_is_complete():
    assert [name.split()[0] for name, *_ in CHECKS] == [str(i) for i in range(1, 10)]


def test_report_lines_are_reproducible():
    a = VerifyReport([run_check(1), run_check(2)]).lines()
    b = VerifyReport([run_check(1), run_check(2)]).lines()
    assert a == b
