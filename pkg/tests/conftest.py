import numpy as np
import pytest

from riskdex import CARA, CRRA, Agent, Log, Quadratic, Tabulated

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance criterion outcome for the end-of-run summary."""

    def _record(name: str, ok: bool, detail: str = "") -> None:
        _CRITERIA[name] = (bool(ok), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0]) if s.split()[0].isdigit() else 99):
        ok, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def tabulated_log() -> Tabulated:
    xs = np.linspace(0.5, 20.0, 40)
    return Tabulated(tuple(xs), tuple(np.log(xs)))


@pytest.fixture(params=["cara", "log", "crra_half", "crra_3", "quadratic", "tabulated"])
def agent(request) -> Agent:
    return {
        "cara": Agent(CARA(1.3), 0.7),
        "log": Agent(Log(), 4.0),
        "crra_half": Agent(CRRA(0.5), 3.0),
        "crra_3": Agent(CRRA(3.0), 2.0),
        "quadratic": Agent(Quadratic(0.05), 2.0),
        "tabulated": Agent(tabulated_log(), 5.0),
    }[request.param]
