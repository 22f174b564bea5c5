import pytest

from toyworld import build_world, write_fixtures

_acceptance_results: dict[str, str] = {}


@pytest.fixture(scope="session")
def world():
    return build_world()


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory, world):
    outdir = tmp_path_factory.mktemp("toyfixtures")
    return write_fixtures(outdir, world=world)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        if report.when == "call":
            _acceptance_results[name] = "PASS" if report.passed else "FAIL"
        elif report.when == "setup" and not report.passed:
            _acceptance_results[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _acceptance_results.items():
        terminalreporter.write_line(f"[{status}] {name}")
