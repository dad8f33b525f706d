import pytest

from retiregame.boundaries import make_context, solve_free_boundaries
from retiregame.dualvalue import build_dual
from retiregame.params import AgentParams, MarketParams
from retiregame.retired import build_retired
from retiregame.utility import make_crra

REF_MARKET = MarketParams(r=0.02, mu=0.07, sigma=0.25, delta=0.10)
REF_AGENT = AgentParams(eps1=1.0, eps2=0.5, kappa1=0.25, kappa2=0.64)


@pytest.fixture(scope="session")
def market():
    return REF_MARKET


@pytest.fixture(scope="session")
def agent():
    return REF_AGENT


@pytest.fixture(scope="session")
def crra2():
    return make_crra(2.0)


@pytest.fixture(scope="session")
def ctx(crra2):
    return make_context(REF_MARKET, REF_AGENT, crra2)


@pytest.fixture(scope="session")
def thresholds(ctx):
    return solve_free_boundaries(ctx)


@pytest.fixture(scope="session")
def retired(crra2):
    return build_retired(REF_MARKET, crra2)


@pytest.fixture(scope="session")
def sol(thresholds, retired, ctx):
    return build_dual(thresholds, retired, ctx)


# -- acceptance report ------------------------------------------------------

_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, label = mark.args
    entry = _CRITERIA.setdefault(n, {"label": label, "ok": True, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = ("PASS" if e["ok"] else "FAIL") if e["ran"] or not e["ok"] else "NOT RUN"
        terminalreporter.write_line(f"criterion {n}: {status}  {e['label']}")
