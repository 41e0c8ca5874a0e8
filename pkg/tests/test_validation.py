import time

from sfheat import validation


def test_quick_suite_all_pass():
    t0 = time.perf_counter()
    results = validation.run_suite(quick=True)
    elapsed = time.perf_counter() - t0
    failures = [r.name for r in results if not r.passed]
    assert not failures, failures
    assert len(results) >= 25
    assert elapsed < 300  # the quick tier stays well under five minutes


def test_format_table_shape():
    results = [validation.ValidationResult("a.check", True, 0.5, 1.0, 0.01),
               validation.ValidationResult("b.check", False, 2.0, 1.0, 0.02)]
    table = validation.format_table(results)
    lines = table.splitlines()
    assert "PASS" in lines[1]
    assert "FAIL" in lines[2]
    assert lines[-1].endswith("1 failure(s)")
