import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pulab.concept_core import ConceptClass  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_class(rng, max_n=8, max_size=24) -> ConceptClass:
    n = int(rng.integers(1, max_n + 1))
    size = int(rng.integers(1, min(2 ** n, max_size) + 1))
    masks = rng.choice(2 ** n, size=size, replace=False)
    return ConceptClass(n, tuple(int(m) for m in masks))


# Acceptance verdicts, printed once at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, summary: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {summary}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
