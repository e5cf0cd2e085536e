import math

import numpy as np
import pytest

from gsfr.errors import ConfigError, DataError
from gsfr.population import (PopulationModel, example1, example2, pop_path, pop_scores,
                             residual_variances)


def table_iteration1(b, beta):
    """Iteration-1 magnitudes shared by the OGA and GSFR tables."""
    return [
        beta + 1 / math.sqrt(1 + b * b),
        beta / math.sqrt(1 + b * b) + 1,
        beta / math.sqrt(2 + 100 * b * b)
        + (1 + 10 * b * b) / math.sqrt((1 + b * b) * (2 + 100 * b * b)),
    ]


def oga_iteration2(b):
    return [0.0, b * b / (1 + b * b), 10 * b * b / math.sqrt((1 + b * b) * (2 + 100 * b * b))]


def gsfr_iteration2(b):
    return [0.0, b / math.sqrt(1 + b * b), 10 * b * b / math.sqrt((1 + b * b) * (1 + 100 * b * b))]


@pytest.mark.parametrize("b,beta", [(1.0, 2.0), (0.5, 1.5), (2.0, 3.0)])
def test_iteration1_matches_tables(b, beta):
    m = example1(b, beta)
    expect = table_iteration1(b, beta)
    np.testing.assert_allclose(np.abs(pop_scores(m, [], "GSFR")), expect, atol=1e-12)
    np.testing.assert_allclose(np.abs(pop_scores(m, [], "OGA")), expect, atol=1e-12)


def test_iteration1_values_at_b1():
    s = pop_scores(example1(1, 2), [], "GSFR")
    assert s[1] == pytest.approx(2.4142, abs=1e-4)
    assert np.array_equal(pop_scores(example1(1, 2), [], "OGA"), pop_scores(example1(1, 2), [], "GSFR"))


@pytest.mark.parametrize("b", [1.0, 0.3, 0.7])
def test_iteration2_matches_tables(b):
    m = example1(b, 2.0)
    np.testing.assert_allclose(np.abs(pop_scores(m, [0], "OGA")), oga_iteration2(b), atol=1e-12)
    np.testing.assert_allclose(np.abs(pop_scores(m, [0], "GSFR")), gsfr_iteration2(b), atol=1e-12)


def test_iteration2_numbers_at_b1():
    m = example1(1.0, 2.0)
    o = np.abs(pop_scores(m, [0], "OGA"))
    g = np.abs(pop_scores(m, [0], "GSFR"))
    assert o[2] == pytest.approx(0.70014, abs=1e-5) and o[1] == pytest.approx(0.5)
    assert g[2] == pytest.approx(0.70360, abs=1e-5) and g[1] == pytest.approx(0.70711, abs=1e-5)


def test_paths_example1():
    m = example1(1.0, 2.0)
    assert pop_path(m, 2, "GSFR") == [0, 1]
    assert pop_path(m, 2, "OGA") == [0, 2]


def test_example2():
    assert pop_path(example2(0.5), 2, "GSFR") == [0, 1]
    # exact collinearity: tie broken towards x1, then x2
    assert pop_path(example2(0.0), 2, "GSFR") == [0, 1]


def test_diagonal_gamma_follows_beta():
    m = PopulationModel(np.eye(4), [0, 5, 0, 1])
    assert pop_path(m, 2, "GSFR") == [1, 3]
    assert pop_path(m, 2, "OGA") == [1, 3]


def test_identity_gamma_methods_coincide():
    rng = np.random.default_rng(0)
    m = PopulationModel(np.eye(6), rng.normal(size=6))
    for J in ([], [2], [0, 4]):
        np.testing.assert_array_equal(pop_scores(m, J, "OGA"), pop_scores(m, J, "GSFR"))


def test_residual_variance_bounds():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(8, 8))
    G = A.T @ A + 0.1 * np.eye(8)
    d = np.sqrt(np.diag(G))
    G = G / np.outer(d, d)
    m = PopulationModel(G, rng.normal(size=8))
    for J in ([0], [1, 5], [2, 3, 7]):
        v = residual_variances(m, J)
        out = [i for i in range(8) if i not in J]
        assert np.all(v[out] > 0) and np.all(v[out] <= np.diag(G)[out] + 1e-12)


def test_singular_gamma_j_raises():
    m = PopulationModel(np.ones((2, 2)), [1.0, 0.0])
    with pytest.raises(DataError):
        pop_scores(m, [0, 1], "GSFR")


def test_model_validation():
    with pytest.raises(ConfigError):
        PopulationModel([[1, 0.5], [0.2, 1]], [1, 1])
    with pytest.raises(ConfigError):
        PopulationModel([[1, 2], [2, 1]], [1, 1])
