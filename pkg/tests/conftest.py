import numpy as np
import pytest

from aslearn.models import AgentModel, Gaussian, laplace_agent, noisy_gaussian_agent

# (means under theta1..theta3, variance, noise-to-signal ratio, count)
NOISY_GROUPS = [
    ((0.0, 0.1, 0.1), 1.0, 1.0, 3),
    ((0.2, 0.0, 0.2), 2.0, 0.1, 3),
    ((0.3, 0.3, 0.0), 3.0, 3.3e-3, 4),
]

# per-agent location index (times 0.1) for theta1..theta3
LAPLACE_LAYOUT = [
    (0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1),
    (2, 1, 0), (0, 1, 1), (1, 1, 0), (2, 2, 1), (0, 0, 1),
]


def make_noisy_agents():
    agents = []
    for means, var, ratio, count in NOISY_GROUPS:
        agents += [noisy_gaussian_agent(means, var, ratio)] * count
    return agents


def make_laplace_agents():
    return [laplace_agent([0.1 * h for h in row]) for row in LAPLACE_LAYOUT]


def make_four_agents():
    """Mismatched Gaussian agents: signal N(0,1), first likelihood N(0.1,1)."""
    return [AgentModel(Gaussian(0.0, 1.0), (Gaussian(0.1, 1.0), Gaussian(m, 1.0))) for m in (-0.1, 0.2, 0.0, 0.1)]


@pytest.fixture
def noisy_agents():
    return make_noisy_agents()


@pytest.fixture
def laplace_agents():
    return make_laplace_agents()


@pytest.fixture
def four_agents():
    return make_four_agents()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
