import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ----------------------------------------------------------
# Every test in test_acceptance.py named test_criterion_NN_* contributes one
# PASS/FAIL line to the terminal summary, labelled with its docstring.

_ACCEPTANCE = {}


def _criterion(item):
    name = item.name
    if not name.startswith("test_criterion_"):
        return None
    return int(name.split("_")[2])


def pytest_collection_modifyitems(items):
    for item in items:
        n = _criterion(item)
        if n is not None:
            doc = (item.obj.__doc__ or "").strip().splitlines()
            _ACCEPTANCE[item.nodeid] = [n, doc[0] if doc else item.name, None]


def pytest_runtest_logreport(report):
    entry = _ACCEPTANCE.get(report.nodeid)
    if entry is None:
        return
    if report.when == "call" or report.outcome != "passed":
        if entry[2] in (None, "PASS"):
            entry[2] = "PASS" if report.outcome == "passed" else report.outcome.upper()


_DETAILS = {}


@pytest.fixture
def detail(request):
    """Record a short measured-value string shown next to the criterion's verdict."""
    def record(text):
        _DETAILS[request.node.nodeid] = text
        print(text)
    return record


def pytest_terminal_summary(terminalreporter):
    ran = sorted((e[0], e[1], e[2], _DETAILS.get(k, ""))
                 for k, e in _ACCEPTANCE.items() if e[2] is not None)
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n, label, status, info in ran:
        verdict = "PASS" if status == "PASS" else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {label}" + (f"  [{info}]" if info else ""))
