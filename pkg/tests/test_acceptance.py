"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line; run with ``-s`` to see
them inline, or read them from the captured output in the report.
"""
import pytest

from mint.acceptance import CRITERIA, CriterionResult, run_suite


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, len(CRITERIA) + 1)])
def test_criterion(criterion, capsys):
    result = criterion()
    assert isinstance(result, CriterionResult)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_suite_rejects_unknown_scale():
    with pytest.raises(ValueError):
        run_suite(scale="cluster")


def test_result_line_format():
    r = CriterionResult(3, "threshold", False, {}, "gap 0.1", 0.0)
    assert r.line() == "[FAIL] criterion 3: threshold (gap 0.1)"
