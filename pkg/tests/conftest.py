import numpy as np
import pytest

from atomfuse import LabelMatrix, ScoreMatrix
from atomfuse.taxonomy import parse_taxonomy

_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _criteria.append((marker.args[0], status))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _criteria:
        terminalreporter.write_line(f"{status}  {name}")


def make_taxonomy(groups):
    """``groups``: {group_id: [class names]} in order."""
    return parse_taxonomy(
        {
            "groups": [{"id": g} for g in groups],
            "classes": [{"name": n, "group": g} for g, names in groups.items() for n in names],
        }
    )


@pytest.fixture
def tax4():
    return make_taxonomy({"C": ["c0", "c1"], "P": ["p0", "p1"]})


@pytest.fixture
def tax2():
    return make_taxonomy({"A": ["x"], "B": ["y"]})


# Two models, two classes. A ranks class x perfectly and class y poorly, B the
# reverse; any mixture with w_A in (0.25, 0.75) ranks both perfectly.
COMPLEMENTARY_LABELS = [
    [1, 0], [0, 1], [1, 0], [0, 0], [0, 1], [1, 0], [0, 1], [0, 0],
]
COMPLEMENTARY_A = [
    [1.05, 0.10], [0.02, 0.05], [1.08, 0.25], [0.01, 0.30],
    [0.06, 0.00], [1.01, 0.20], [0.03, 0.15], [0.09, 0.28],
]
COMPLEMENTARY_B = [
    [0.30, 0.02], [0.10, 1.03], [0.05, 0.07], [0.25, 0.01],
    [0.28, 1.09], [0.00, 0.04], [0.20, 1.00], [0.15, 0.06],
]


@pytest.fixture
def complementary(tax2):
    ids = [f"clip{i}" for i in range(8)]
    labels = LabelMatrix(ids, np.array(COMPLEMENTARY_LABELS))
    a = ScoreMatrix("A", ids, np.array(COMPLEMENTARY_A))
    b = ScoreMatrix("B", ids, np.array(COMPLEMENTARY_B))
    return [a, b], labels, tax2
