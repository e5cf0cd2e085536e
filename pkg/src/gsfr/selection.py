"""Forward-selection engines: GSFR, OGA and naive projection-based FR.

All three share :class:`PathState`, an incremental Gram-Schmidt state that
keeps every candidate column residualized against the selected ones.  GSFR
and OGA differ only in the denominator of their score; FR ignores the state
for selection and refits least squares for every candidate instead.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError, InvariantError

log = logging.getLogger(__name__)

GSFR = "GSFR"
OGA = "OGA"
FR = "FR"
METHODS = (GSFR, OGA, FR)

#: Columns whose mean squared residualized value drops below this are dropped.
DEGENERATE_TOL = 1e-12
#: Relative RSS level treated as an exact fit.
PERFECT_FIT_TOL = 1e-14


def compute_kn(n: int, p: int, mult: float = 5.0) -> int:
    """Iteration budget ``floor(mult * sqrt(n / log p))``, capped at ``min(n-1, p)``."""
    if n < 2 or p < 2 or not mult > 0:
        raise ConfigError(f"compute_kn needs n >= 2, p >= 2, mult > 0 (got {n}, {p}, {mult})")
    k = math.floor(mult * math.sqrt(n / math.log(p)))
    return int(min(max(1, k), n - 1, p))


@dataclass(frozen=True)
class SelectorConfig:
    """Selector settings.

    ``kn=None`` means the default budget ``compute_kn(n, p, 5)``.
    ``fr_timeout_s`` caps the wall-clock of the FR baseline only.
    """

    rho1: float = 1e-6
    kn: Optional[int] = None
    tie_rule: str = "lowest-index"
    log_base: str = "natural"
    fr_timeout_s: Optional[float] = None

    def __post_init__(self):
        if not self.rho1 >= 0:
            raise ConfigError(f"rho1 must be >= 0, got {self.rho1}")
        if self.kn is not None and self.kn < 1:
            raise ConfigError(f"kn must be >= 1, got {self.kn}")
        if self.tie_rule != "lowest-index":
            raise ConfigError("only the lowest-index tie rule is supported")


class PathState:
    """Mutable Gram-Schmidt state for one selection path.

    Attributes
    ----------
    residual, fitted : ndarray (n,)
        ``residual + fitted == y`` at every step.
    Xperp : ndarray (n, p)
        Candidate columns residualized on the selected ones.
    sq_norms : ndarray (p,)
        ``mean(Xperp**2, axis=0)``.
    active : ndarray of bool (p,)
        False once a column is selected or found degenerate.
    directions : list of ndarray
        ``Xperp[:, j]`` of each selected column at the moment it was chosen.
    """

    def __init__(self, data: Dataset):
        self.y = data.y
        self.n = data.n
        self.residual = np.array(data.y, dtype=float)
        self.fitted = np.zeros(data.n)
        self.Xperp = np.array(data.X, dtype=float)
        self.sq_norms = np.einsum("ij,ij->j", self.Xperp, self.Xperp) / data.n
        self.active = ~np.asarray(data.degenerate, dtype=bool)
        self.step = 0
        self.selected: List[int] = []
        self.directions: List[np.ndarray] = []
        self.last_beta: Optional[float] = None
        self.deactivate_degenerate()

    def deactivate_degenerate(self) -> np.ndarray:
        bad = self.active & (self.sq_norms < DEGENERATE_TOL)
        self.active[bad] = False
        return np.flatnonzero(bad)

    @property
    def rss(self) -> float:
        return float(self.residual @ self.residual)


def _numerators(state: PathState, data: Dataset) -> np.ndarray:
    return (data.X.T @ state.residual) / state.n


def gsfr_scores(state: PathState, data: Dataset, cfg: SelectorConfig) -> np.ndarray:
    """Unique-contribution scores of every column.

    ``score_j = mean(r * x_j) / (sqrt(mean(xperp_j**2)) + rho1 * sqrt(log p / n))``
    and 0 for inactive columns.
    """
    if cfg.rho1 == 0:
        state.deactivate_degenerate()
    num = _numerators(state, data)
    adj = cfg.rho1 * math.sqrt(math.log(data.p) / data.n)
    denom = np.sqrt(state.sq_norms) + adj
    scores = np.zeros(data.p)
    act = state.active
    scores[act] = num[act] / denom[act]
    return scores


def oga_scores(state: PathState, data: Dataset) -> np.ndarray:
    """Marginal-contribution scores: ``mean(r * x_j) / sqrt(mean(x_j**2))``."""
    num = _numerators(state, data)
    norms = np.sqrt(np.einsum("ij,ij->j", data.X, data.X) / data.n)
    scores = np.zeros(data.p)
    act = state.active & (norms > 0)
    scores[act] = num[act] / norms[act]
    return scores


def unique_contribution(state: PathState, data: Dataset, j: int) -> float:
    """``|mean(r * x_j)| / sqrt(mean(xperp_j**2))``, i.e. the score with rho1 = 0."""
    sq = state.sq_norms[j]
    if sq < DEGENERATE_TOL:
        return 0.0
    return abs(float(data.X[:, j] @ state.residual) / state.n) / math.sqrt(sq)


def advance(state: PathState, j_sel: int, data: Dataset) -> PathState:
    """Add column ``j_sel`` to the model and re-orthogonalize every column.

    One classical Gram-Schmidt sweep: each candidate loses its projection on
    the residualized selected column, with coefficient computed from the
    original column.  Mutates and returns ``state``.
    """
    if not state.active[j_sel]:
        raise InvariantError(f"column {j_sel} is not active")
    if not state.sq_norms[j_sel] > DEGENERATE_TOL:
        raise InvariantError(
            f"column {j_sel} is degenerate (mean square {state.sq_norms[j_sel]:.3g})")
    d = state.Xperp[:, j_sel].copy()
    dd = float(d @ d)
    beta = float(state.residual @ d) / dd
    state.fitted += beta * d
    state.residual = state.y - state.fitted
    alpha = (data.X.T @ d) / dd
    state.Xperp -= np.outer(d, alpha)
    state.sq_norms = np.einsum("ij,ij->j", state.Xperp, state.Xperp) / state.n
    state.active[j_sel] = False
    state.selected.append(int(j_sel))
    state.directions.append(d)
    state.step += 1
    state.last_beta = beta
    state.deactivate_degenerate()
    return state


@dataclass
class SelectionPath:
    """Ordered output of one forward-selection run.

    ``crit_values[m]`` is the winning score (with the rho1 adjustment for
    GSFR) at step ``m+1``; ``contributions[m]`` is the same winner's
    unadjusted unique contribution, which the ratio stopping rule consumes.
    ``sigma2`` has one more entry than ``selected`` (the empty model first).
    """

    method: str
    selected: List[int]
    crit_values: List[float]
    contributions: List[float]
    sigma2: List[float]
    step_betas: List[float]
    sel_sq_norms: List[float]
    n: int
    p: int
    kn: int
    rho1: float
    tie_rule: str = "lowest-index"
    stop_reason: str = "budget"
    warnings: List[str] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.selected)

    @property
    def terminated_early(self) -> bool:
        return self.stop_reason in ("perfect_fit", "exhausted")

    def prefix(self, k: int) -> tuple:
        return tuple(self.selected[:k])

    def to_dict(self) -> dict:
        return asdict(self)


def _argmax_abs(scores: np.ndarray) -> int:
    # np.argmax returns the first (lowest-index) maximizer
    return int(np.argmax(np.abs(scores)))


def _effective_kn(data: Dataset, cfg: SelectorConfig, warn: List[str]) -> int:
    kn = cfg.kn if cfg.kn is not None else compute_kn(data.n, data.p, 5.0)
    cap = min(data.n - 1, data.p)
    if kn > cap:
        warn.append(f"kn={kn} clipped to min(n-1, p)={cap}")
        log.info("kn=%d clipped to %d", kn, cap)
        kn = cap
    return kn


def _perfect_fit(rss: float, n: int, rss0: float) -> bool:
    return rss < PERFECT_FIT_TOL * n * max(1.0, rss0 / n)


def run_path(data: Dataset, method: str = GSFR,
             cfg: Optional[SelectorConfig] = None) -> SelectionPath:
    """Run ``method`` for up to ``kn`` steps and record the path."""
    cfg = cfg or SelectorConfig()
    method = method.upper()
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
    if data.n < 2:
        raise DataError("need at least 2 observations")
    warn: List[str] = []
    kn = _effective_kn(data, cfg, warn)
    if method == FR:
        return _run_fr(data, cfg, kn, warn)

    state = PathState(data)
    rss0 = state.rss
    path = SelectionPath(method=method, selected=state.selected, crit_values=[],
                         contributions=[], sigma2=[rss0 / data.n], step_betas=[],
                         sel_sq_norms=[], n=data.n, p=data.p, kn=kn,
                         rho1=cfg.rho1, tie_rule=cfg.tie_rule, warnings=warn)
    while state.step < kn:
        if _perfect_fit(state.rss, data.n, rss0):
            path.stop_reason = "perfect_fit"
            break
        if method == GSFR:
            scores = gsfr_scores(state, data, cfg)
        else:
            scores = oga_scores(state, data)
        j = _argmax_abs(scores)
        if scores[j] == 0.0 or not state.active[j]:
            path.stop_reason = "exhausted"
            break
        path.crit_values.append(abs(float(scores[j])))
        path.contributions.append(unique_contribution(state, data, j))
        path.sel_sq_norms.append(float(state.sq_norms[j]))
        advance(state, j, data)
        path.step_betas.append(state.last_beta)
        path.sigma2.append(state.rss / data.n)
    return path


def _lstsq_rss(A: np.ndarray, y: np.ndarray):
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(r @ r), rank, coef


def _run_fr(data: Dataset, cfg: SelectorConfig, kn: int, warn) -> SelectionPath:
    """Forward regression by brute-force refits (no reuse between steps)."""
    X, y, n = data.X, data.y, data.n
    active = ~np.asarray(data.degenerate, dtype=bool)
    selected: List[int] = []
    rss_prev = float(y @ y)
    rss0 = rss_prev
    path = SelectionPath(method=FR, selected=selected, crit_values=[],
                         contributions=[], sigma2=[rss0 / n], step_betas=[],
                         sel_sq_norms=[], n=n, p=data.p, kn=kn, rho1=0.0,
                         tie_rule=cfg.tie_rule, warnings=warn)
    deadline = None
    if cfg.fr_timeout_s is not None:
        deadline = time.perf_counter() + cfg.fr_timeout_s
    residual = y.copy()
    while len(selected) < kn:
        if _perfect_fit(rss_prev, n, rss0):
            path.stop_reason = "perfect_fit"
            break
        best_j, best_rss = -1, math.inf
        for j in np.flatnonzero(active):
            rss, rank, _ = _lstsq_rss(X[:, selected + [int(j)]], y)
            if rank < len(selected) + 1:
                active[j] = False  # collinear with the current model
                continue
            if rss < best_rss:
                best_j, best_rss = int(j), rss
            if deadline is not None and time.perf_counter() > deadline:
                break
        if deadline is not None and time.perf_counter() > deadline:
            path.stop_reason = "timeout"
            warn.append(f"FR stopped after {cfg.fr_timeout_s}s at step {len(selected)}")
            break
        if best_j < 0:
            path.stop_reason = "exhausted"
            break
        xj = X[:, best_j]
        if selected:
            _, _, c = _lstsq_rss(X[:, selected], xj)
            xperp = xj - X[:, selected] @ c
        else:
            xperp = xj.copy()
        sq = float(xperp @ xperp)
        beta = float(residual @ xperp) / sq
        drop = max(rss_prev - best_rss, 0.0) / n
        selected.append(best_j)
        active[best_j] = False
        _, _, coef = _lstsq_rss(X[:, selected], y)
        residual = y - X[:, selected] @ coef
        rss_prev = float(residual @ residual)
        path.crit_values.append(math.sqrt(drop))
        path.contributions.append(math.sqrt(drop))
        path.sel_sq_norms.append(sq / n)
        path.step_betas.append(beta)
        path.sigma2.append(rss_prev / n)
    return path


@dataclass(frozen=True)
class OlsFit:
    """Least-squares refit on a support, expressed in original units."""

    support: tuple
    coef: np.ndarray
    intercept: float
    rss: float
    names: tuple = ()

    def predict(self, x_new) -> float:
        return predict(self, x_new)


def _offending_columns(Xs: np.ndarray, J: Sequence[int]) -> List[int]:
    bad, keep = [], []
    for k, j in enumerate(J):
        trial = Xs[:, keep + [k]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            bad.append(j)
        else:
            keep.append(k)
    return bad


def refit_ols(data: Dataset, J: Sequence[int]) -> OlsFit:
    """Ordinary least squares of ``y`` on the columns ``J`` plus an intercept."""
    J = tuple(int(j) for j in J)
    if len(set(J)) != len(J):
        raise ConfigError("support has duplicate indices")
    if len(J) > data.n - 1:
        raise DataError(f"support of size {len(J)} exceeds n-1 = {data.n - 1}")
    names = tuple(data.name(j) for j in J)
    if not J:
        return OlsFit((), np.zeros(0), data.y_mean, float(data.y @ data.y), ())
    Xs = data.X[:, J]
    s = np.linalg.svd(Xs, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        bad = _offending_columns(Xs, J)
        raise DataError("rank-deficient design; offending columns: "
                        + ", ".join(data.name(j) for j in bad))
    b, _, _, _ = np.linalg.lstsq(Xs, data.y, rcond=None)
    r = data.y - Xs @ b
    coef = b / data.x_scales[list(J)]
    intercept = data.y_mean - float(coef @ data.x_means[list(J)])
    return OlsFit(J, coef, intercept, float(r @ r), names)


def predict(model: OlsFit, x_new) -> float:
    """Prediction for one raw (original-units) row of length ``p``."""
    x = np.asarray(x_new, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite predictor value")
    if not model.support:
        return float(model.intercept)
    return float(model.intercept + model.coef @ x[list(model.support)])
