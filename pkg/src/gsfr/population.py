"""Closed-form population scores for OGA and GSFR.

Given the predictor covariance ``Gamma`` and coefficients ``beta``, the
population criteria need only ``Gamma(J)``, ``g_i(J)`` and ``Gamma @ beta``,
so the motivating examples can be evaluated without sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import linalg

from .errors import ConfigError, DataError

PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class PopulationModel:
    Gamma: np.ndarray
    beta: np.ndarray
    noise_var: float = 1.0

    def __post_init__(self):
        G = np.asarray(self.Gamma, dtype=float)
        b = np.asarray(self.beta, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] != b.shape[0]:
            raise ConfigError("Gamma must be p x p and beta length p")
        if not np.allclose(G, G.T, atol=1e-12):
            raise ConfigError("Gamma must be symmetric")
        if np.linalg.eigvalsh(G).min() < -1e-10:
            raise ConfigError("Gamma must be positive semidefinite")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be >= 0")
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "beta", b)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @classmethod
    def from_loadings(cls, B, beta, noise_var: float = 1.0) -> "PopulationModel":
        """Predictors ``x_i = B[:, i] @ z`` with ``z ~ N(0, I)``, so ``Gamma = B'B``."""
        B = np.asarray(B, dtype=float)
        return cls(B.T @ B, beta, noise_var)


def example1(b: float = 1.0, beta: float = 2.0) -> PopulationModel:
    """Three highly correlated predictors where OGA picks the wrong second variable."""
    if b < 0:
        raise ConfigError("b must be >= 0")
    r1 = math.sqrt(1 + b * b)
    r3 = math.sqrt(2 + 100 * b * b)
    B = np.array([[1.0, 1 / r1, 1 / r3],
                  [0.0, b / r1, 10 * b / r3],
                  [0.0, 0.0, 1 / r3]])
    G = B.T @ B
    np.fill_diagonal(G, 1.0)  # unit variances by construction
    return PopulationModel(G, [beta, 1.0, 0.0])


def example2(eta: float = 0.5) -> PopulationModel:
    """``x3`` is nearly collinear with ``x1`` as ``eta -> 0``."""
    if eta < 0:
        raise ConfigError("eta must be >= 0")
    B = np.array([[2.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0],
                  [0.0, 0.0, eta]])
    return PopulationModel.from_loadings(B, [2.0, 1.0, 0.0])


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    if A.size == 0:
        return np.zeros(b.shape)
    w = np.linalg.eigvalsh(A)
    if w.min() <= PIVOT_TOL:
        raise DataError(f"Gamma(J) is singular (min eigenvalue {w.min():.3g})")
    return linalg.solve(A, b, assume_a="pos")


def residual_variances(model: PopulationModel, J: Sequence[int]) -> np.ndarray:
    """``E[xperp_{i;J}^2] = Gamma_ii - g_i(J)' Gamma(J)^{-1} g_i(J)`` for every i."""
    J = list(J)
    G = model.Gamma
    if not J:
        return np.diag(G).copy()
    GJ = G[np.ix_(J, J)]
    gi = G[J, :]
    sol = _solve_spd(GJ, gi)
    v = np.diag(G) - np.einsum("ji,ji->i", gi, sol)
    v[J] = 0.0
    return v


def residual_covariances(model: PopulationModel, J: Sequence[int]) -> np.ndarray:
    """``E[(y - y_J) x_i] = (Gamma beta)_i - g_i(J)' Gamma(J)^{-1} (Gamma beta)(J)``."""
    J = list(J)
    G = model.Gamma
    gb = G @ model.beta
    if not J:
        return gb
    coef = _solve_spd(G[np.ix_(J, J)], gb[J])
    c = gb - G[:, J] @ coef
    c[J] = 0.0
    return c


def pop_scores(model: PopulationModel, J: Sequence[int], method: str = "GSFR") -> np.ndarray:
    """Population OGA or GSFR scores given the selected set ``J``.

    GSFR divides the residual covariance by ``E[xperp^2]^(1/2)``; candidates
    with zero residual variance (exact collinearity with ``J``) score 0.
    """
    method = method.upper()
    J = [int(j) for j in J]
    cov = residual_covariances(model, J)
    if method == "OGA":
        out = cov
    elif method == "GSFR":
        var = residual_variances(model, J)
        out = np.zeros_like(cov)
        ok = var > PIVOT_TOL
        out[ok] = cov[ok] / np.sqrt(var[ok])
    else:
        raise ConfigError(f"unknown method {method!r}")
    out = out.copy()
    out[J] = 0.0
    return out


def pop_path(model: PopulationModel, K: int, method: str = "GSFR") -> List[int]:
    """Greedy population path (0-based indices, lowest index on ties)."""
    if K > model.p:
        raise ConfigError(f"K={K} exceeds p={model.p}")
    J: List[int] = []
    for _ in range(K):
        s = np.abs(pop_scores(model, J, method))
        j = int(np.argmax(s))
        if s[j] <= 1e-12:
            break
        J.append(j)
    return J
