import pytest

from bldcsim.config import SimConfig
from bldcsim.engine import run_scenario


@pytest.fixture(scope="session")
def short_run():
    """Startup scenario just past the handover; shared by the cheap engine/trace tests."""
    cfg = SimConfig().replace(t_end=0.25, scenario__kind="startup")
    trace, summary = run_scenario(cfg)
    return cfg, trace, summary


_acceptance = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for the end-of-run acceptance report."""
    results = request.config.stash.setdefault(_acceptance, {})

    def record(number, title, ok, detail):
        results[number] = (title, ok, detail)
    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_acceptance, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok, detail = results[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}  {title}: {detail}")
