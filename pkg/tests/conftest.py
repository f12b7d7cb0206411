import pytest

from riskpool import CostParams, Population

# criterion id -> (passed, detail); filled by the acceptance tests
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def table2():
    return Population.of(0.02, 0.025, 500, 500), CostParams(V=1000.0, b_p=2.0)


@pytest.fixture
def table3():
    return Population.of(0.02, 0.04, 500, 500), CostParams(V=1000.0, b_p=2.0)


@pytest.fixture
def table1():
    return Population.of(0.02, 0.025, 500, 500), CostParams(V=1000.0, model="expected_value")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = item.get_closest_marker("criterion")
    if label is None or rep.when != "call":
        return
    detail = getattr(item, "criterion_detail", "")
    if rep.failed and not detail:
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else ""
    ACCEPTANCE[label.args[0]] = (rep.passed, detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
