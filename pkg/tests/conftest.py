import sys

import pytest

from lambdadelay import calibrated, default_params


@pytest.fixture(scope="session")
def calibration_result():
    return calibrated()


@pytest.fixture(scope="session")
def cal(calibration_result):
    return calibration_result.calibration


@pytest.fixture(scope="session")
def params(calibration_result):
    return calibration_result.params


@pytest.fixture
def base():
    return default_params()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
