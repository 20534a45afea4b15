import sys

import pytest

from helpers import BASELINE_SUITE, CASE_STUDY_SOURCE, EXTENDED_SUITE, STUB_RUNNER


@pytest.fixture
def case_study_source() -> str:
    return CASE_STUDY_SOURCE


@pytest.fixture
def baseline_suite() -> str:
    return BASELINE_SUITE


@pytest.fixture
def extended_suite() -> str:
    return EXTENDED_SUITE


@pytest.fixture
def stub_runner_cmd() -> tuple[str, ...]:
    return (sys.executable, "-u", str(STUB_RUNNER))
