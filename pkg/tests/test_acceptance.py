"""The acceptance battery at full sample counts, one test per criterion.

The battery runs once per session (about a minute and a half on one core)
and each test prints its PASS/FAIL line straight to the terminal.
"""
import pytest

from rudin_lab.verify.battery import CRITERIA, run_battery

# Runtime ceilings in seconds; criterion 9 allows five minutes per group, three groups.
RUNTIME_LIMIT = {1: 1, 2: 1, 3: 5, 4: 120, 5: 120, 6: 10, 7: 10, 8: 10, 9: 900, 10: 300}

NESTING_REASON = ("S(3 eps) is not contained in U(12 eps) for small eps: two sphere points at angle t have "
                  "|1 - <z, w>| ~ t^2 / 2 but |z - w| ~ t; the sampled counterexample is recorded in the report")


@pytest.fixture(scope="session")
def battery():
    return {r.number: r for r in run_battery()}


def _report(capsys, result):
    with capsys.disabled():
        print("\n" + result.line())


def _numbers():
    for n in sorted(CRITERIA):
        marks = [pytest.mark.xfail(strict=True, reason=NESTING_REASON)] if n == 6 else []
        yield pytest.param(n, marks=marks, id=f"criterion-{n}")


@pytest.mark.parametrize("number", list(_numbers()))
def test_criterion(battery, capsys, number):
    result = battery[number]
    _report(capsys, result)
    if number in RUNTIME_LIMIT:
        assert result.runtime < RUNTIME_LIMIT[number]
    assert result.passed, result.details


@pytest.mark.parametrize("number", sorted(RUNTIME_LIMIT))
def test_criterion_runtime(battery, number):
    assert battery[number].runtime < RUNTIME_LIMIT[number]


def test_criterion_6_parts_that_hold(battery):
    """The first inclusion and the corrected second inclusion have no violations anywhere."""
    det = battery[6].details
    for key, rep in det.items():
        if key == "counterexample":
            continue
        assert rep["violations"]["U_in_S3"] == 0
        assert rep["violations"]["S3_in_U_loose"] == 0
        if rep["epsilon"] >= 0.05:
            assert rep["violations"]["S3_in_U12"] == 0
    cex = det["counterexample"]
    assert cex["s_measure"] < 3 * cex["epsilon"] and cex["u_measure"] > 12 * cex["epsilon"]
