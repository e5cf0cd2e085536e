"""Model-size rules applied to a finished :class:`SelectionPath`.

The ratio rule picks the step after which the unique contribution of the
next variable collapses.  HDBIC and BIC are the information-criterion
baselines used for OGA and FR.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .selection import SelectionPath

RATIO = "ratio"
HDBIC = "hdbic"
BIC = "bic"
NONE = "none"
RULES = (RATIO, HDBIC, BIC, NONE)


@dataclass(frozen=True)
class StopConfig:
    """Adjustment for the ratio rule.

    By default the adjustment is the constant ``rho2_term``.  When both
    ``gamma`` and ``eps0`` are given it becomes
    ``rho2_term * n ** -(1.5 * gamma + eps0)``.
    """

    rho2_term: float = 1e-6
    gamma: Optional[float] = None
    eps0: Optional[float] = None

    def __post_init__(self):
        if not self.rho2_term > 0:
            raise ConfigError(f"rho2_term must be > 0, got {self.rho2_term}")

    def adjustment(self, n: int) -> float:
        if self.gamma is None or self.eps0 is None:
            return self.rho2_term
        return self.rho2_term * n ** -(1.5 * self.gamma + self.eps0)


@dataclass
class StopDecision:
    k_hat: int
    rule: str
    deltas: List[float] = field(default_factory=list)
    criterion: List[float] = field(default_factory=list)
    selected: tuple = ()

    def to_dict(self) -> dict:
        return asdict(self)


def ratio_deltas(contrib: Sequence[float], adj: float) -> np.ndarray:
    """``(c[m+1] + adj) / (c[m] + adj)`` for consecutive contributions."""
    c = np.abs(np.asarray(contrib, dtype=float))
    if c.size < 2:
        raise ValueError("path too short for ratio rule")
    return (c[1:] + adj) / (c[:-1] + adj)


def _contributions(path: SelectionPath) -> List[float]:
    c = list(path.contributions)
    # The residual (or every remaining candidate) is exhausted, so the next
    # unique contribution is exactly zero.
    if path.terminated_early:
        c.append(0.0)
    return c


def delta_sequence(path: SelectionPath, cfg: Optional[StopConfig] = None) -> List[float]:
    cfg = cfg or StopConfig()
    return ratio_deltas(_contributions(path), cfg.adjustment(path.n)).tolist()


def _argmin(values) -> int:
    return int(np.argmin(np.asarray(values)))  # first minimizer


def select_size_ratio(path: SelectionPath, cfg: Optional[StopConfig] = None) -> StopDecision:
    """``k_hat = argmin_m delta[m]`` over ``m = 1 .. K-1`` (lowest m on ties)."""
    deltas = delta_sequence(path, cfg)
    k = _argmin(deltas) + 1
    return StopDecision(k_hat=k, rule=RATIO, deltas=deltas, selected=path.prefix(k))


def _ic_select(path: SelectionPath, penalty_per_var: float, rule: str) -> StopDecision:
    if path.K < 1:
        raise ValueError("empty path")
    n = path.n
    values = []
    for m in range(1, path.K + 1):
        s2 = path.sigma2[m]
        if s2 <= 0:
            values.append(-math.inf)
            break
        values.append(n * math.log(s2) + m * penalty_per_var)
    k = _argmin(values) + 1
    return StopDecision(k_hat=k, rule=rule, criterion=values, selected=path.prefix(k))


def select_size_hdbic(path: SelectionPath, data=None) -> StopDecision:
    """``argmin_m n log sigma2_m + m log(n) log(p)``."""
    n, p = path.n, path.p
    return _ic_select(path, math.log(n) * math.log(p), HDBIC)


def select_size_bic(path: SelectionPath, data=None) -> StopDecision:
    """``argmin_m n log sigma2_m + m (log n + 2 log p)``."""
    n, p = path.n, path.p
    return _ic_select(path, math.log(n) + 2.0 * math.log(p), BIC)


def select_size_none(path: SelectionPath, data=None) -> StopDecision:
    return StopDecision(k_hat=path.K, rule=NONE, selected=path.prefix(path.K))


def select_size(path: SelectionPath, rule: str, cfg: Optional[StopConfig] = None) -> StopDecision:
    rule = rule.lower()
    if rule == RATIO:
        return select_size_ratio(path, cfg)
    if rule == HDBIC:
        return select_size_hdbic(path)
    if rule == BIC:
        return select_size_bic(path)
    if rule == NONE:
        return select_size_none(path)
    raise ConfigError(f"unknown stop rule {rule!r}; choose from {RULES}")
