"""Simulation designs, per-replication metrics and the Monte Carlo driver.

Every replication draws its data from its own PCG64 substream,
``SeedSequence(base_seed, spawn_key=(r,))``, so any replication can be
replayed in isolation and the report does not depend on worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .data import RawDataset, standardize
from .errors import ConfigError, GsfrError
from .selection import FR, GSFR, OGA, SelectionPath, SelectorConfig, compute_kn, \
    predict, refit_ols, run_path
from .stopping import BIC, HDBIC, RATIO, StopConfig, StopDecision, select_size

RNG_NAME = f"numpy.random.PCG64/SeedSequence(spawn_key=(r,)) numpy {np.__version__}"

EXAMPLE_TAGS = {
    3: "AR1-MA",
    4: "compound-symmetry",
    5: "independent-diverging",
}
_TAG_TO_EXAMPLE = {v: k for k, v in EXAMPLE_TAGS.items()}

EXAMPLE3_BETA = (3.0, -3.5, 4.0, -2.8, 3.25)
EXAMPLE4_BETA = (3.0,) * 5


def example_number(example) -> int:
    if isinstance(example, str) and example in _TAG_TO_EXAMPLE:
        return _TAG_TO_EXAMPLE[example]
    try:
        ex = int(example)
    except (TypeError, ValueError):
        ex = None
    if ex not in EXAMPLE_TAGS:
        raise ConfigError(f"unknown example {example!r}; use 3, 4, 5 or "
                          + ", ".join(EXAMPLE_TAGS.values()))
    return ex


def example5_support_size(n: int) -> int:
    return int(math.floor(3 * n ** 0.25))


@dataclass(frozen=True)
class DgpSpec:
    """One simulation design.

    ``example`` is 3 (moving-average columns), 4 (one shared factor) or 5
    (independent columns, ``floor(3 n^(1/4))`` random coefficients).
    """

    example: int
    n: int
    p: int
    theta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "example", example_number(self.example))
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.p < self.q:
            raise ConfigError(f"p={self.p} smaller than support size {self.q}")

    @property
    def q(self) -> int:
        if self.example == 5:
            return example5_support_size(self.n)
        return 5

    @property
    def tag(self) -> str:
        return EXAMPLE_TAGS[self.example]


@dataclass(frozen=True)
class SimTruth:
    support: tuple
    beta_true: np.ndarray
    test_x: np.ndarray
    test_y: float


def replication_rng(base_seed: int, r: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(r),))
    return np.random.Generator(np.random.PCG64(ss))


def generate(spec: DgpSpec, rng: Optional[np.random.Generator] = None):
    """Draw ``n + 1`` rows; the last one is held out as the test row."""
    if rng is None:
        rng = replication_rng(spec.seed, 0)
    n1, p = spec.n + 1, spec.p
    beta = np.zeros(p)
    if spec.example == 3:
        beta[:5] = EXAMPLE3_BETA
        d = rng.standard_normal((n1, p + 1))
        X = d[:, 1:] + spec.theta * d[:, :-1]
    elif spec.example == 4:
        beta[:5] = EXAMPLE4_BETA
        d = rng.standard_normal((n1, p))
        w = rng.standard_normal((n1, 1))
        X = d + spec.theta * w
    else:
        q = spec.q
        u = rng.random(q) < 0.4
        z = rng.standard_normal(q)
        beta[:q] = np.where(u, -1.0, 1.0) * (5 * math.log(spec.n) / math.sqrt(spec.n) + np.abs(z))
        X = rng.standard_normal((n1, p))
    eps = rng.standard_normal(n1)
    y = X @ beta + eps
    support = tuple(int(j) for j in np.flatnonzero(beta))
    truth = SimTruth(support, beta, X[-1].copy(), float(y[-1]))
    return RawDataset(y[:-1], X[:-1]), truth


@dataclass(frozen=True)
class MethodSpec:
    """A selector, its iteration budget and its stopping rule.

    ``budget`` is ``"kn"`` for the ``compute_kn`` horizon or ``"full"`` for
    ``min(n - 1, p)`` steps.
    """

    name: str
    selector: str
    stop: str
    budget: str = "kn"


STANDARD_METHODS = {
    "OGA": MethodSpec("OGA", OGA, HDBIC, "kn"),
    "FR": MethodSpec("FR", FR, BIC, "full"),
    "GSFRn": MethodSpec("GSFRn", GSFR, RATIO, "full"),
    "GSFR": MethodSpec("GSFR", GSFR, RATIO, "kn"),
}


def method_specs(names: Sequence) -> List[MethodSpec]:
    out = []
    lookup = {k.lower(): v for k, v in STANDARD_METHODS.items()}
    for m in names:
        if isinstance(m, MethodSpec):
            out.append(m)
        elif str(m).lower() in lookup:
            out.append(lookup[str(m).lower()])
        else:
            raise ConfigError(f"unknown method {m!r}; choose from {list(STANDARD_METHODS)}")
    return out


def fit_method(data, method: MethodSpec, kn: int, sel_cfg: SelectorConfig,
               stop_cfg: StopConfig):
    """Run one selector plus its stopping rule; returns (path, decision, seconds)."""
    budget = kn if method.budget == "kn" else min(data.n - 1, data.p)
    cfg = replace(sel_cfg, kn=budget)
    t0 = time.perf_counter()
    path = run_path(data, method.selector, cfg)
    min_len = 2 if method.stop == "ratio" else 1
    if path.stop_reason == "timeout" and path.K < min_len:
        # timed out too early for the rule; keep whatever was selected
        decision = StopDecision(path.K, method.stop, selected=path.prefix(path.K))
    else:
        decision = select_size(path, method.stop, stop_cfg)
    return path, decision, time.perf_counter() - t0


def best_size(path: SelectionPath, support: Sequence[int]) -> int:
    """First path length containing the whole support, else the budget."""
    need = set(support)
    for m in range(len(need), path.K + 1):
        if need.issubset(path.selected[:m]):
            return m
    return path.kn


def evaluate(path: SelectionPath, decision: StopDecision, truth: SimTruth, data) -> dict:
    """Per-replication metrics for one method."""
    N = set(truth.support)
    J = set(decision.selected)
    p = data.p
    fit = refit_ols(data, decision.selected)
    yhat = predict(fit, truth.test_x)
    covered = N.issubset(J)
    return {
        "covered": covered,
        "screened": N.issubset(path.selected),
        "fn": len(N - J) / len(N) if N else 0.0,
        "fp": len(J - N) / (p - len(N)) if p > len(N) else 0.0,
        "best_size": best_size(path, truth.support),
        "selected_size": len(J),
        "rss": fit.rss,
        "mspe": (truth.test_y - yhat) ** 2,
        "path_len": path.K,
        "stop_reason": path.stop_reason,
    }


@dataclass
class MethodSummary:
    coverage_pct: float
    fn_pct: float
    fp_pct: float
    best_size_mean: float
    selected_size_mean: float
    runtime_mean_s: float
    rss_mean: float
    mspe_mean: float
    screening_pct: float
    agreement_pct: float
    timed_out: int = 0


def summarize(records: List[dict]) -> MethodSummary:
    cov = np.array([r["covered"] for r in records])
    sizes_best = np.array([r["best_size"] for r in records], dtype=float)
    sizes_sel = np.array([r["selected_size"] for r in records], dtype=float)

    def mean(a):
        return float(np.mean(a)) if len(a) else float("nan")

    agree = sizes_best[cov] == sizes_sel[cov]
    return MethodSummary(
        coverage_pct=100 * mean(cov),
        fn_pct=100 * mean([r["fn"] for r in records]),
        fp_pct=100 * mean([r["fp"] for r in records]),
        best_size_mean=mean(sizes_best[cov]),
        selected_size_mean=mean(sizes_sel[cov]),
        runtime_mean_s=mean([r["runtime_s"] for r in records]),
        rss_mean=mean([r["rss"] for r in records]),
        mspe_mean=mean([r["mspe"] for r in records]),
        screening_pct=100 * mean([r["screened"] for r in records]),
        agreement_pct=100 * mean(agree),
        timed_out=sum(r["stop_reason"] == "timeout" for r in records),
    )


@dataclass
class SimReport:
    """Aggregated Monte Carlo results, one :class:`MethodSummary` per method."""

    config: dict
    T: int
    methods: Dict[str, MethodSummary]
    replications: Dict[str, List[dict]] = field(default_factory=dict)
    rng: str = RNG_NAME

    def metrics_only(self) -> dict:
        """Everything except wall-clock timings (for determinism checks)."""
        out = {}
        for name, s in self.methods.items():
            d = asdict(s)
            d.pop("runtime_mean_s")
            out[name] = d
        reps = {name: [{k: v for k, v in r.items() if k != "runtime_s"} for r in recs]
                for name, recs in self.replications.items()}
        return {"summary": out, "replications": reps}

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "T": self.T,
            "rng": self.rng,
            "methods": {k: asdict(v) for k, v in self.methods.items()},
            "replications": self.replications,
        }


@dataclass(frozen=True)
class _Job:
    spec: DgpSpec
    methods: tuple
    kn: int
    sel_cfg: SelectorConfig
    stop_cfg: StopConfig
    scale_columns: bool
    base_seed: int


def run_replication(job: _Job, r: int) -> Dict[str, dict]:
    raw, truth = generate(job.spec, replication_rng(job.base_seed, r))
    data = standardize(raw, scale_columns=job.scale_columns)
    out = {}
    for m in job.methods:
        path, decision, secs = fit_method(data, m, job.kn, job.sel_cfg, job.stop_cfg)
        rec = evaluate(path, decision, truth, data)
        rec["runtime_s"] = secs
        out[m.name] = rec
    return out


def _guarded(args):
    job, r = args
    try:
        return run_replication(job, r)
    except Exception as e:  # re-raised with replay information below
        return e


class ReplicationError(GsfrError, RuntimeError):
    exit_code = 4


def default_threads() -> int:
    env = os.environ.get("GSFR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_monte_carlo(spec: DgpSpec, methods=("GSFR",), T: int = 100,
                    base_seed: Optional[int] = None, kn_mult: float = 5.0,
                    rho1: float = 1e-6, rho2_term: float = 1e-6,
                    scale_columns: bool = False, fr_timeout_s: Optional[float] = None,
                    threads: int = 1, keep_replications: bool = True) -> SimReport:
    """Run ``T`` replications of ``spec`` for each method and aggregate.

    All methods see the same data in a replication.  Simulated predictors
    are centered only unless ``scale_columns`` is set.
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if base_seed is None:
        base_seed = spec.seed
    ms = tuple(method_specs(methods))
    kn = compute_kn(spec.n, spec.p, kn_mult)
    job = _Job(spec, ms, kn, SelectorConfig(rho1=rho1, fr_timeout_s=fr_timeout_s),
               StopConfig(rho2_term=rho2_term), scale_columns, int(base_seed))
    args = [(job, r) for r in range(T)]
    if threads > 1 and T > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_guarded, args, chunksize=max(1, T // (4 * threads))))
    else:
        results = []
        for a in args:
            results.append(_guarded(a))
            if isinstance(results[-1], Exception):
                break
    for r, res in enumerate(results):
        if isinstance(res, Exception):
            raise ReplicationError(
                f"replication {r} failed (base_seed={base_seed}, spawn_key=({r},)): {res}"
            ) from res
    per_method = {m.name: [res[m.name] for res in results] for m in ms}
    config = {
        "example": spec.example, "tag": spec.tag, "n": spec.n, "p": spec.p,
        "theta": spec.theta, "q": spec.q, "T": T, "base_seed": int(base_seed),
        "kn_mult": kn_mult, "kn": kn, "rho1": rho1, "rho2_term": rho2_term,
        "scale_columns": scale_columns, "fr_timeout_s": fr_timeout_s,
        "methods": [asdict(m) for m in ms],
    }
    return SimReport(
        config=config, T=T,
        methods={name: summarize(recs) for name, recs in per_method.items()},
        replications=per_method if keep_replications else {},
    )


def bench_runtime(spec: DgpSpec, methods=("OGA", "FR", "GSFR"), T: int = 3,
                  kn_mult: float = 5.0, fr_timeout_s: Optional[float] = 300.0,
                  same_budget: bool = True, base_seed: Optional[int] = None) -> dict:
    """Mean wall-clock per fit (selection plus stopping) for each method.

    With ``same_budget`` every method runs the ``compute_kn`` horizon, so
    the comparison isolates per-step cost.  A timed-out FR entry is reported
    as the string ``"> cap"``.
    """
    if base_seed is None:
        base_seed = spec.seed
    ms = method_specs(methods)
    if same_budget:
        ms = [replace(m, budget="kn") for m in ms]
    kn = compute_kn(spec.n, spec.p, kn_mult)
    sel = SelectorConfig(fr_timeout_s=fr_timeout_s)
    stop = StopConfig()
    times: Dict[str, List[float]] = {m.name: [] for m in ms}
    timeouts = {m.name: 0 for m in ms}
    for r in range(T):
        raw, _ = generate(spec, replication_rng(base_seed, r))
        data = standardize(raw, scale_columns=False)
        for m in ms:
            path, _, secs = fit_method(data, m, kn, sel, stop)
            times[m.name].append(secs)
            timeouts[m.name] += path.stop_reason == "timeout"
    table = {}
    for name, ts in times.items():
        table[name] = {
            "mean_s": float(np.mean(ts)),
            "display": f"> {fr_timeout_s:g}" if timeouts[name] else f"{np.mean(ts):.4f}",
            "timed_out": timeouts[name],
        }
    return {"config": {"example": spec.example, "n": spec.n, "p": spec.p,
                       "theta": spec.theta, "T": T, "kn": kn, "same_budget": same_budget,
                       "fr_timeout_s": fr_timeout_s, "base_seed": int(base_seed)},
            "runtime": table}
