import json
from pathlib import Path

import pytest
from hypothesis import settings

from wgmkit.mode_solver import ModeSpec, solve_mode

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def bessel_reference():
    return json.loads((FIXTURES / "bessel_reference.json").read_text())["rows"]


@pytest.fixture(scope="session")
def wgh20():
    return solve_mode(ModeSpec(20, 0.025, 0.03, 9.27, 11.35))


@pytest.fixture(scope="session")
def wgh19():
    return solve_mode(ModeSpec(19, 0.025, 0.03, 9.27, 11.35))


@pytest.fixture(scope="session")
def sweep12(wgh20):
    import numpy as np

    from wgmkit.power_chain import measurement_chain
    from wgmkit.synthetic import synth_sweep

    chain = measurement_chain()
    src = np.linspace(-10.0, 56.0, 12)
    traces, points = synth_sweep(src, chain, wgh20.p_m_perp, seed=0)
    return chain, traces, points


ACCEPTANCE_LINES: list = []


def record_acceptance(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
