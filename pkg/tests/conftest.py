import numpy as np
import pytest

from gsfr.data import RawDataset, standardize

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gaussian_instance(rng, n=30, p=10, snr=10.0, k=3):
    """Dense Gaussian design with ``k`` active coefficients and the given SNR."""
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    idx = rng.choice(p, size=k, replace=False)
    beta[idx] = rng.uniform(0.5, 2.0, size=k) * rng.choice([-1, 1], size=k)
    signal = X @ beta
    sigma = np.sqrt(signal.var() / snr)
    y = signal + sigma * rng.standard_normal(n)
    return RawDataset(y, X)


def normal_equations_fit(X, y, cols):
    """Projection of ``y`` on ``X[:, cols]`` via an explicit inverse of the Gram matrix."""
    cols = list(cols)
    if not cols:
        return np.zeros_like(y)
    A = X[:, cols]
    G = np.linalg.inv(A.T @ A)
    return A @ (G @ (A.T @ y))


def brute_force_forward(X, y, K):
    """Forward selection by exhaustive RSS minimization over every candidate."""
    sel = []
    p = X.shape[1]
    for _ in range(K):
        best, best_rss = None, np.inf
        for j in range(p):
            if j in sel:
                continue
            r = y - normal_equations_fit(X, y, sel + [j])
            rss = r @ r
            if rss < best_rss:
                best, best_rss = j, rss
        sel.append(best)
    return sel


@pytest.fixture
def rng():
    return np.random.default_rng(20251015)


@pytest.fixture
def small_data(rng):
    return standardize(gaussian_instance(rng, n=40, p=12))
