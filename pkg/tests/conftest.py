from pathlib import Path

import pytest

from pabisim.io import load_model, parse_distribution

MODELS = Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS


@pytest.fixture()
def fig1_sum():
    return load_model(MODELS / "fig1_sum.pa")


@pytest.fixture()
def fig1_sum_eps():
    return load_model(MODELS / "fig1_sum_eps.pa")


@pytest.fixture()
def fig1_left():
    return load_model(MODELS / "fig1_left.pa")


def dist(a, text):
    return parse_distribution(text, a)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
