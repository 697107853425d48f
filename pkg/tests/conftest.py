import re

import pytest

from ramify.scenarios_cli import load_scenario, run_scenario
from ramify.scenarios_cli.runner import DATA_DIR

_RESULTS: dict = {}
_LABEL = re.compile(r"test_(criterion_\d+|property)_(\w+?)(\[.*\])?$")


@pytest.fixture(scope="session")
def scenario_report():
    """Run a bundled scenario once per session and hand back its report."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = run_scenario(load_scenario(DATA_DIR / f"{name}.scn"))
        return cache[name]

    return get


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = _LABEL.search(report.nodeid.split("::")[-1])
    if not m:
        return
    kind, rest = m.group(1), m.group(2)
    if kind == "property":
        label = f"property {rest.replace('_', ' ')}"
    else:
        label = f"criterion {kind.split('_')[1]}: {rest.replace('_', ' ')}"
    ok = report.outcome == "passed"
    _RESULTS[label] = _RESULTS.get(label, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance")

    def order(label):
        m = re.match(r"criterion (\d+)", label)
        return (0, int(m.group(1)), label) if m else (1, 0, label)

    for label in sorted(_RESULTS, key=order):
        tr.write_line(f"{'PASS' if _RESULTS[label] else 'FAIL'}  {label}")
    npass = sum(_RESULTS.values())
    tr.write_line(f"{npass}/{len(_RESULTS)} acceptance lines pass")
