import numpy as np
import pytest

from binae.autoencoder import TrainConfig

ACCEPTANCE_LINES = []


def record_acceptance(name, passed, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_cfg():
    """Small enough to train in about a second."""
    return TrainConfig(
        k=4, n=7, epochs_total=8, epochs_continuous=5, train_samples=2000,
        restarts=1, seed=3, val_trials=2000, select_trials=5000,
    )
