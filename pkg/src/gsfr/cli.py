"""Command-line entry point: ``gsfr {fit,simulate,bench,population,replay}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import List, Optional

import numpy as np

from . import __version__
from .data import ingest_csv, standardize
from .errors import ConfigError, DataError, GsfrError, InvariantError
from .population import example1, example2, pop_path, pop_scores
from .report import format_table, read_json, sim_table, write_json
from .selection import GSFR, SelectorConfig, compute_kn, predict, refit_ols
from .simbench import (DgpSpec, STANDARD_METHODS, bench_runtime, default_threads,
                       fit_method, method_specs, replication_rng, run_monte_carlo)
from .stopping import StopConfig

log = logging.getLogger("gsfr")

COMMANDS = ("fit", "simulate", "bench", "population")


@dataclass
class RunConfig:
    """Fully resolved settings of one run; written into every report."""

    command: str
    methods: List[str] = field(default_factory=lambda: ["GSFR"])
    stop: Optional[str] = None
    kn_mult: float = 5.0
    kn: Optional[int] = None
    rho1: float = 1e-6
    rho2_term: float = 1e-6
    seed: int = 0
    T: int = 100
    input: Optional[str] = None
    response: str = "y"
    out: Optional[str] = None
    fr_timeout_s: Optional[float] = None
    example: Optional[int] = None
    n: Optional[int] = None
    p: Optional[int] = None
    theta: float = 0.0
    b: float = 1.0
    beta: float = 2.0
    eta: float = 0.5
    scale_columns: Optional[bool] = None
    holdout: Optional[int] = None
    splits: int = 1
    threads: Optional[int] = None
    keep_replications: bool = True

    def resolve(self):
        """Fill command-dependent defaults so the stored config is explicit."""
        if self.scale_columns is None:
            self.scale_columns = self.command == "fit"
        if self.command == "simulate" and self.threads is None:
            self.threads = default_threads()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.kn_mult > 0:
            raise ConfigError("--kn-mult must be > 0")
        if self.rho1 < 0 or not self.rho2_term > 0:
            raise ConfigError("--rho1 must be >= 0 and --rho2-term > 0")
        if self.command in ("simulate", "bench"):
            if self.T < 1:
                raise ConfigError(f"--T must be >= 1, got {self.T}")
            if self.example is None or self.n is None or self.p is None:
                raise ConfigError("--example, --n and --p are required")
        if self.command == "fit" and not self.input:
            raise ConfigError("fit needs --input")
        if self.holdout is not None and self.holdout < 1:
            raise ConfigError("--holdout must be >= 1")
        if self.splits < 1:
            raise ConfigError("--splits must be >= 1")
        method_specs(self.methods)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _method(cfg: RunConfig, name: str):
    m = method_specs([name])[0]
    if cfg.stop:
        m = replace(m, stop=cfg.stop.lower())
    return m


def _fit_once(data, m, cfg: RunConfig):
    kn = cfg.kn if cfg.kn is not None else compute_kn(data.n, max(data.p, 2), cfg.kn_mult)
    sel = SelectorConfig(rho1=cfg.rho1, fr_timeout_s=cfg.fr_timeout_s)
    path, decision, secs = fit_method(data, m, kn, sel, StopConfig(rho2_term=cfg.rho2_term))
    model = refit_ols(data, decision.selected)
    return kn, path, decision, model, secs


def cmd_fit(cfg: RunConfig) -> dict:
    raw = ingest_csv(cfg.input, cfg.response)
    scale = cfg.scale_columns
    data = standardize(raw, scale_columns=scale)
    results = {}
    lines = []
    for name in cfg.methods:
        m = _method(cfg, name)
        kn, path, decision, model, secs = _fit_once(data, m, cfg)
        res = {
            "kn": path.kn,
            "stop_rule": decision.rule,
            "k_hat": decision.k_hat,
            "selected": [data.name(j) for j in decision.selected],
            "selected_index": [j + 1 for j in decision.selected],
            "path": [data.name(j) for j in path.selected],
            "intercept": model.intercept,
            "coefficients": dict(zip(model.names, model.coef.tolist())),
            "rss": model.rss,
            "sigma2": path.sigma2,
            "deltas": decision.deltas,
            "criterion": decision.criterion,
            "stop_reason": path.stop_reason,
            "warnings": path.warnings,
            "runtime_s": secs,
        }
        if cfg.holdout:
            res["holdout"] = _holdout(raw, m, cfg, scale)
        results[m.name] = res
        lines.append(f"{m.name}: k_hat={decision.k_hat} (rule {decision.rule}, K={path.K}, kn={path.kn})")
        lines.append("  selected: " + ", ".join(res["selected"]))
        lines.append("  intercept: %.6g" % model.intercept)
        for nm, c in res["coefficients"].items():
            lines.append(f"  {nm}: {c:.6g}")
        if cfg.holdout:
            h = res["holdout"]
            lines.append(f"  holdout {cfg.holdout} x {cfg.splits}: mean size {h['selected_size_mean']:.2f}, "
                         f"MSPE {h['mspe_mean']:.4f}, time {h['runtime_mean_s']:.4f}s")
    print("\n".join(lines))
    return {"n": data.n, "p": data.p, "results": results}


def _holdout(raw, m, cfg: RunConfig, scale: bool) -> dict:
    if cfg.holdout >= raw.n - 1:
        raise ConfigError(f"--holdout {cfg.holdout} leaves fewer than 2 training rows")
    sizes, mspes, times = [], [], []
    for s in range(cfg.splits):
        rng = replication_rng(cfg.seed, s)
        test = np.sort(rng.choice(raw.n, size=cfg.holdout, replace=False))
        train = np.setdiff1d(np.arange(raw.n), test)
        data = standardize(raw.take_rows(train), scale_columns=scale)
        _, _, decision, model, secs = _fit_once(data, m, cfg)
        pred = np.array([predict(model, x) for x in raw.X[test]])
        mspes.append(float(np.mean((raw.y[test] - pred) ** 2)))
        sizes.append(len(decision.selected))
        times.append(secs)
    return {"selected_size_mean": float(np.mean(sizes)), "mspe_mean": float(np.mean(mspes)),
            "runtime_mean_s": float(np.mean(times)), "sizes": sizes, "mspe": mspes}


def cmd_simulate(cfg: RunConfig) -> dict:
    spec = DgpSpec(cfg.example, cfg.n, cfg.p, cfg.theta, cfg.seed)
    scale = cfg.scale_columns
    threads = cfg.threads or 1
    kn = compute_kn(cfg.n, cfg.p, cfg.kn_mult)
    print(f"# example {spec.example} ({spec.tag}) n={spec.n} p={spec.p} theta={spec.theta:g} "
          f"T={cfg.T} seed={cfg.seed} K_n={kn}")
    report = run_monte_carlo(spec, cfg.methods, T=cfg.T, base_seed=cfg.seed,
                             kn_mult=cfg.kn_mult, rho1=cfg.rho1, rho2_term=cfg.rho2_term,
                             scale_columns=scale, fr_timeout_s=cfg.fr_timeout_s,
                             threads=threads, keep_replications=cfg.keep_replications)
    display = {name: f"> {cfg.fr_timeout_s:g}" for name, s in report.methods.items()
               if s.timed_out}
    print(sim_table(report.methods, display))
    return report.to_dict()


def cmd_bench(cfg: RunConfig) -> dict:
    spec = DgpSpec(cfg.example, cfg.n, cfg.p, cfg.theta, cfg.seed)
    res = bench_runtime(spec, cfg.methods, T=cfg.T, kn_mult=cfg.kn_mult,
                        fr_timeout_s=cfg.fr_timeout_s)
    rows = [[k, v["display"]] for k, v in res["runtime"].items()]
    print(f"# example {spec.example} n={spec.n} p={spec.p} T={cfg.T} K_n={res['config']['kn']}")
    print(format_table(["Method", "Mean time (s)"], rows))
    return res


def cmd_population(cfg: RunConfig) -> dict:
    ex = cfg.example if cfg.example is not None else 1
    if ex == 1:
        if cfg.b < 0 or not cfg.beta > 0:
            raise ConfigError("example 1 needs b >= 0 and beta > 0")
        model = example1(cfg.b, cfg.beta)
    elif ex == 2:
        if cfg.eta < 0:
            raise ConfigError("example 2 needs eta >= 0")
        model = example2(cfg.eta)
    else:
        raise ConfigError("population supports --example 1 or 2")
    out = {"example": ex, "iterations": {}, "paths": {}}
    header = ["Variable"]
    cols = []
    for method in ("OGA", "GSFR"):
        path = pop_path(model, 2, method)
        out["paths"][method] = [j + 1 for j in path]
        for it in range(2):
            J = path[:it]
            s = np.abs(pop_scores(model, J, method))
            win = path[it] if it < len(path) else None
            out["iterations"][f"{method}-{it + 1}"] = s.tolist()
            header.append(f"{method} it{it + 1}")
            cols.append([f"{v:.5f}" + ("*" if j == win else " ") for j, v in enumerate(s)])
    rows = [[f"x{j + 1}", *(c[j] for c in cols)] for j in range(model.p)]
    print(format_table(header, rows))
    for method, path in out["paths"].items():
        print(f"{method} path: " + ", ".join(f"x{j}" for j in path))
    return out


RUNNERS = {"fit": cmd_fit, "simulate": cmd_simulate, "bench": cmd_bench,
           "population": cmd_population}


def execute(cfg: RunConfig) -> dict:
    cfg.validate()
    cfg.resolve()
    t0 = time.perf_counter()
    body = RUNNERS[cfg.command](cfg)
    if "config" in body:
        body["design"] = body.pop("config")
    payload = {"config": asdict(cfg), "version": __version__,
               "elapsed_s": time.perf_counter() - t0, **body}
    if cfg.out:
        write_json(cfg.out, payload)
    return payload


def _methods_arg(text: str) -> List[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    lookup = {k.lower(): k for k in STANDARD_METHODS}
    return [lookup.get(n.lower(), n) for n in names]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsfr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gsfr {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, methods_default):
        p.add_argument("--method", "--methods", dest="methods", type=_methods_arg,
                       default=methods_default, help="comma-separated: GSFR, GSFRn, OGA, FR")
        p.add_argument("--kn-mult", type=float, default=5.0)
        p.add_argument("--rho1", type=float, default=1e-6)
        p.add_argument("--rho2-term", type=float, default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--fr-timeout", dest="fr_timeout_s", type=float, default=None)
        p.add_argument("--out", default=None, help="write the JSON report here")

    p = sub.add_parser("fit", help="select variables on a CSV file")
    common(p, ["GSFR"])
    p.add_argument("--input", required=True)
    p.add_argument("--response", default="y", help="response column name or 1-based position")
    p.add_argument("--stop", choices=["ratio", "hdbic", "bic", "none"], default=None)
    p.add_argument("--kn", type=int, default=None, help="override the iteration budget")
    p.add_argument("--holdout", type=int, default=None)
    p.add_argument("--splits", type=int, default=1)
    p.add_argument("--no-scale", dest="scale_columns", action="store_false", default=None)

    for name, help_ in (("simulate", "Monte Carlo simulation"), ("bench", "runtime comparison")):
        p = sub.add_parser(name, help=help_)
        common(p, ["OGA", "FR", "GSFRn", "GSFR"] if name == "simulate" else ["OGA", "FR", "GSFR"])
        p.add_argument("--example", type=int, required=True, choices=[3, 4, 5])
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--p", type=int, required=True)
        p.add_argument("--theta", type=float, default=0.0)
        p.add_argument("--T", type=int, default=100 if name == "simulate" else 3)
        if name == "simulate":
            p.add_argument("--scale-columns", action="store_true", default=None)
            p.add_argument("--threads", type=int, default=None)
            p.add_argument("--no-replications", dest="keep_replications", action="store_false")

    p = sub.add_parser("population", help="exact population scores for examples 1 and 2")
    p.add_argument("--example", type=int, default=1)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--out", default=None)

    p = sub.add_parser("replay", help="re-run the configuration stored in a report")
    p.add_argument("report")
    p.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            try:
                stored = read_json(args.report)["config"]
            except (OSError, ValueError, KeyError) as e:
                raise ConfigError(f"cannot replay {args.report}: {e}") from e
            cfg = RunConfig.from_dict(stored)
            cfg.out = args.out
        else:
            d = {k: v for k, v in vars(args).items() if k != "verbose"}
            if d.get("scale_columns") is None:
                d.pop("scale_columns", None)
            cfg = RunConfig.from_dict(d)
        execute(cfg)
    except GsfrError as e:
        print(f"gsfr: error: {e}", file=sys.stderr)
        return e.exit_code
    except (ValueError, np.linalg.LinAlgError) as e:
        print(f"gsfr: data error: {e}", file=sys.stderr)
        return DataError.exit_code
    except (AssertionError, RuntimeError) as e:
        print(f"gsfr: internal error: {e}", file=sys.stderr)
        return InvariantError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
