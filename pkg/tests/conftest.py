import random

import pytest

from uvcark.asm import assemble
from uvcark.machine import run
from uvcark.restore import init_state

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture
def rng():
    return random.Random(20050630)


def run_source(source, inputs=(), fuel=100_000, **limits):
    """Assemble ``source``, run it on ``inputs`` and return the RunResult."""
    image, _ = assemble(source)
    return run(init_state(image, inputs, **limits), fuel)


@pytest.fixture
def uvc():
    return run_source


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
