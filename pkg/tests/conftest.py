import pytest

from decpomdp_pbp import dp
from decpomdp_pbp.model import build_paper_example, build_random_example, replace_problem


@pytest.fixture(scope="session")
def example():
    return build_paper_example()


@pytest.fixture(scope="session")
def example_report(example):
    return dp.pbp_iterate(example)


@pytest.fixture(scope="session")
def converged(example_report):
    return example_report.profile


@pytest.fixture(scope="session")
def tiny():
    # n=2, T=1, binary spaces, two agents
    return build_random_example(3, horizon=2, delay=1)


@pytest.fixture(scope="session")
def no_sharing(example):
    return replace_problem(example, delay=example.horizon, name="no_sharing")


@pytest.fixture(scope="session")
def one_step_delay(example):
    return replace_problem(example, delay=1, name="one_step_delay")


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request, pytestconfig):
    """Record one pass/fail line for an acceptance criterion; call with
    ``(ok, detail)``.  Lines are echoed live and again in the summary."""
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
