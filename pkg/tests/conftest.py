import time

import numpy as np
import pytest

from fairbound.core import LabeledDataset
from fairbound.divergence import EstimatorConfig, estimate_tv_variational
from fairbound.synthetic import gaussian_pair

ACCEPTANCE_LINES = []
# wall-clock seconds of each session-scoped estimator run, keyed by fixture label
ESTIMATE_SECONDS = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rate_fixture():
    """Cells hand-filled so that P(f=1|y,z) is 2/3, 1/2 (y=1) and 1/2, 1/4 (y=0)."""
    rows = [
        # (label, group, decision)
        (1, "a", 1), (1, "a", 1), (1, "a", 0),
        (1, "b", 1), (1, "b", 0),
        (0, "a", 1), (0, "a", 0),
        (0, "b", 1), (0, "b", 0), (0, "b", 0), (0, "b", 0),
    ]
    labels, groups, decisions = map(np.array, zip(*rows))
    data = LabeledDataset(np.zeros((len(rows), 1)), labels, groups)
    return data, decisions


@pytest.fixture(scope="session")
def gaussian_samples():
    return gaussian_pair(10_000, seed=2024)


@pytest.fixture(scope="session")
def gaussian_estimate(gaussian_samples):
    p, q = gaussian_samples
    start = time.perf_counter()
    est = estimate_tv_variational(p, q, EstimatorConfig(seed=0))
    ESTIMATE_SECONDS["gaussian"] = time.perf_counter() - start
    return est


DISCRETE_PAIRS = [
    ([0.5, 0.5, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4]),
    ([0.25, 0.25, 0.25, 0.25], [0.4, 0.1, 0.4, 0.1]),
    ([0.1, 0.3, 0.05, 0.25, 0.2, 0.1], [0.3, 0.1, 0.25, 0.05, 0.1, 0.2]),
]


@pytest.fixture(scope="session")
def discrete_estimates():
    """(exact TV, variational estimate) for each pmf pair, 10,000 one-hot samples per side."""
    from fairbound.divergence import exact_tv_discrete

    out = []
    for k, (p, q) in enumerate(DISCRETE_PAIRS):
        rng = np.random.default_rng(100 + k)
        eye = np.eye(len(p))
        sp = eye[rng.choice(len(p), 10_000, p=p)]
        sq = eye[rng.choice(len(q), 10_000, p=q)]
        start = time.perf_counter()
        est = estimate_tv_variational(sp, sq, EstimatorConfig(seed=k))
        ESTIMATE_SECONDS[f"discrete{k}"] = time.perf_counter() - start
        out.append((exact_tv_discrete(p, q), est.value))
    return out
