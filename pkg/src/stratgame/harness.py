"""Experiment runner: seeded simulations, bound checks and reports.

A config names an environment, a learner, a setting and a horizon, plus the
seeds to run and the bound formulas to evaluate.  Every seed produces one
row (mistakes, rounds, output loss for PAC runs); aggregates and bound
verdicts are pure functions of the rows, so reports regenerate bit-exactly.
Seed-level parallelism is opt-in through STRATGAME_THREADS.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .core.predictors import UnionPredictor
from .core.response import strategic_loss
from .environments import make_environment
from .learners import make_learner
from .oracle import analytic_union_loss
from .protocol import Setting, run_online, run_pac

SCHEMA_VERSION = 1

_PAC_LEARNERS = ("random-union",)
_PAC_PREFIXES = ("survivor:", "boost:")


@dataclass
class ExperimentConfig:
    env: str
    learner: str
    setting: str = "x-delta-after"
    n: int = 8
    T: int = 100
    seeds: list = field(default_factory=lambda: [0])
    mode: str = "auto"
    eps: float | None = None
    delta: float | None = None
    env_eps: float | None = None
    target: int | None = None
    alpha: float = 0.1
    budget: int | None = None
    base_rounds: int | None = None
    c: float | None = None
    estimation_samples: int = 1000
    stream_space: str = "star"
    radius_law: str | None = None
    loss_samples: int = 100_000
    bounds: list = field(default_factory=list)
    record: str = "counts"

    def resolved_mode(self) -> str:
        if self.mode != "auto":
            return self.mode
        if self.learner in _PAC_LEARNERS or self.learner.startswith(_PAC_PREFIXES):
            return "pac"
        return "online"

    def family_eps(self) -> float | None:
        return self.env_eps if self.env_eps is not None else self.eps


def _threads() -> int:
    raw = os.environ.get("STRATGAME_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


_env_cache: dict = {}


def _environment(cfg: ExperimentConfig):
    key = (cfg.env, cfg.n, cfg.family_eps(), cfg.target, cfg.alpha, cfg.c,
           cfg.estimation_samples, cfg.stream_space, cfg.radius_law)
    env = _env_cache.get(key)
    if env is None:
        env = make_environment(
            cfg.env, cfg.n, eps=cfg.family_eps(), target=cfg.target,
            alpha=cfg.alpha, c=cfg.c, samples=cfg.estimation_samples,
            stream_space=cfg.stream_space, radius_law=cfg.radius_law)
        _env_cache[key] = env
    return env


def _learner(cfg: ExperimentConfig, class_size: int):
    return make_learner(cfg.learner, n=class_size, epsilon=cfg.eps,
                        delta=cfg.delta, budget=cfg.budget,
                        base_rounds=cfg.base_rounds)


def monte_carlo_loss(space, f, source, N: int, seed: int) -> tuple:
    """Mean of N i.i.d. strategic-loss draws with its binomial standard error."""
    if N < 1:
        raise ValueError("need at least one sample")
    import random as _random
    rng = _random.Random(f"{seed}:mc")
    hits = sum(strategic_loss(space, f, source.sample(rng)) for _ in range(N))
    p = hits / N
    return p, math.sqrt(p * (1.0 - p) / N)


def output_loss(cfg: ExperimentConfig, env, output, seed: int) -> float:
    """Loss of a PAC output: closed form for class unions on the hard
    families, Monte Carlo otherwise."""
    family = env.family
    tag = getattr(family, "tag", None)
    if tag in ("appG", "appI", "appJ", "appK") and isinstance(output, UnionPredictor):
        return float(analytic_union_loss(tag, cfg.n, family.eps, family.target,
                                         output.parts))
    if family is not None:
        est, _ = monte_carlo_loss(family.space, output, family, cfg.loss_samples, seed)
        return est
    raise ValueError("output loss needs an i.i.d. family environment")


def run_single_seed(cfg: ExperimentConfig, seed: int) -> dict:
    env = _environment(cfg)
    learner = _learner(cfg, len(env.hclass))
    source = env.source_for_run(seed, cfg.T)
    setting = Setting.from_name(cfg.setting)
    if cfg.resolved_mode() == "pac":
        out, transcript = run_pac(source, learner, setting, cfg.T, seed,
                                  record=cfg.record,
                                  estimation_samples=cfg.estimation_samples)
        loss = output_loss(cfg, env, out, seed)
    else:
        transcript = run_online(source, learner, setting, cfg.T, seed,
                                record=cfg.record,
                                estimation_samples=cfg.estimation_samples)
        loss = None
    return {"seed": seed, "mistakes": transcript.mistakes,
            "rounds": transcript.T, "output_loss": loss}


def _seed_worker(cfg_dict: dict, seed: int) -> dict:
    return run_single_seed(ExperimentConfig(**cfg_dict), seed)


# ---------------------------------------------------------------------------
# aggregation and bound formulas


def _mean(xs) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def _stderr(xs) -> float:
    k = len(xs)
    if k < 2:
        return 0.0
    m = _mean(xs)
    var = sum((x - m) ** 2 for x in xs) / (k - 1)
    return math.sqrt(var / k)


def aggregate_rows(rows: list) -> dict:
    mk = [r["mistakes"] for r in rows]
    agg = {
        "seeds": len(rows),
        "mean_mistakes": _mean(mk),
        "stderr_mistakes": _stderr(mk),
        "min_mistakes": min(mk) if mk else 0,
        "max_mistakes": max(mk) if mk else 0,
    }
    losses = [r["output_loss"] for r in rows if r["output_loss"] is not None]
    if losses:
        agg.update({
            "mean_output_loss": _mean(losses),
            "stderr_output_loss": _stderr(losses),
            "min_output_loss": min(losses),
            "max_output_loss": max(losses),
        })
    return agg


def _bound_halving(cfg, params, rows, agg):
    value = float(math.ceil(math.log2(cfg.n)))
    observed = float(agg["max_mistakes"])
    return value, observed, observed <= value


def _bound_mwmr(cfg, params, rows, agg):
    value = min(math.sqrt(4.0 * math.log(cfg.n) * cfg.T), cfg.n - 1.0)
    observed = agg["mean_mistakes"] + 3.0 * agg["stderr_mistakes"]
    return value, observed, observed <= value + 1e-12


def _bound_adversary_floor(cfg, params, rows, agg):
    delta = params.get("delta", cfg.delta)
    value = min(cfg.T / (5.0 * cfg.n * math.log(cfg.n / delta)), cfg.n - 1.0)
    need = math.ceil(value - 1e-9)
    frac = _mean([1.0 if r["mistakes"] >= need else 0.0 for r in rows])
    return value, frac, frac >= params.get("fraction", 0.7)


def _bound_expected_loss(cfg, params, rows, agg):
    value = params.get("eps", cfg.eps)
    observed = agg["mean_output_loss"]
    slack = 3.0 * agg["stderr_output_loss"]
    return value, observed, observed <= value + slack + 1e-12


def _bound_loss_quantile(cfg, params, rows, agg):
    limit = params["limit"]
    losses = [r["output_loss"] for r in rows]
    frac = _mean([1.0 if x <= limit + 1e-12 else 0.0 for x in losses])
    return limit, frac, frac >= params.get("fraction", 0.9)


def _bound_exact_mistakes(cfg, params, rows, agg):
    count = params["count"]
    ok = all(r["mistakes"] == count for r in rows)
    return float(count), float(agg["max_mistakes"]), ok


def _bound_union_budget(cfg, params, rows, agg):
    eps = params.get("eps", cfg.eps)
    value = 320.0 * math.log2(cfg.n) * math.log(cfg.n) / eps
    return value, float(cfg.T), cfg.T >= value


BOUND_LIBRARY = {
    "halving-mistake-bound": _bound_halving,
    "mwmr-expected-mistake-bound": _bound_mwmr,
    "adversary-mistake-floor": _bound_adversary_floor,
    "expected-loss": _bound_expected_loss,
    "loss-quantile": _bound_loss_quantile,
    "exact-mistake-count": _bound_exact_mistakes,
    "union-round-budget": _bound_union_budget,
}


def evaluate_bounds(cfg: ExperimentConfig, rows: list, agg: dict) -> list:
    out = []
    for spec in cfg.bounds:
        params = dict(spec)
        name = params.pop("name")
        fn = BOUND_LIBRARY.get(name)
        if fn is None:
            raise KeyError(f"unknown bound {name!r}; known: {sorted(BOUND_LIBRARY)}")
        value, observed, passed = fn(cfg, params, rows, agg)
        out.append({"name": name, "value": value, "observed": observed,
                    "pass": bool(passed)})
    return out


@dataclass
class MetricsReport:
    schema_version: int
    config: dict
    rows: list
    aggregate: dict
    bounds: list
    wall_clock_s: float

    @property
    def all_bounds_pass(self) -> bool:
        return all(b["pass"] for b in self.bounds)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_rows(cls, cfg: ExperimentConfig, rows: list,
                  wall_clock_s: float) -> "MetricsReport":
        rows = sorted(rows, key=lambda r: r["seed"])
        agg = aggregate_rows(rows)
        bounds = evaluate_bounds(cfg, rows, agg)
        return cls(SCHEMA_VERSION, asdict(cfg), rows, agg, bounds, wall_clock_s)

    def regenerate(self) -> "MetricsReport":
        """Rebuild aggregates and bounds from the stored rows; bit-exact."""
        cfg = ExperimentConfig(**self.config)
        return MetricsReport.from_rows(cfg, self.rows, self.wall_clock_s)


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> MetricsReport:
    """Execute every seed (in parallel when configured) and evaluate bounds."""
    for spec in cfg.bounds:
        if spec.get("name") not in BOUND_LIBRARY:
            raise KeyError(f"unknown bound {spec.get('name')!r}; "
                           f"known: {sorted(BOUND_LIBRARY)}")
    env = _environment(cfg)  # validate parameters before spawning workers
    _learner(cfg, len(env.hclass))  # validate learner spec
    start = time.perf_counter()
    threads = _threads() if threads is None else max(1, threads)
    seeds = list(cfg.seeds)
    if threads > 1 and len(seeds) > 1:
        cfg_dict = asdict(cfg)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_seed_worker, [cfg_dict] * len(seeds), seeds,
                                 chunksize=max(1, len(seeds) // (4 * threads))))
    else:
        rows = [run_single_seed(cfg, s) for s in seeds]
    wall = time.perf_counter() - start
    return MetricsReport.from_rows(cfg, rows, wall)


# ---------------------------------------------------------------------------
# serialization


def emit_report(report: MetricsReport, fmt: str) -> bytes:
    """Deterministic serialization: canonical json or per-seed csv summary."""
    if fmt == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv-summary":
        lines = ["seed,mistakes,rounds,output_loss"]
        for r in report.rows:
            loss = "" if r["output_loss"] is None else repr(r["output_loss"])
            lines.append(f"{r['seed']},{r['mistakes']},{r['rounds']},{loss}")
        if report.rows:
            agg = report.aggregate
            loss = ("" if "mean_output_loss" not in agg
                    else repr(agg["mean_output_loss"]))
            lines.append(f"aggregate,{agg['mean_mistakes']!r},,{loss}")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_config_file(text: str) -> dict:
    """Flat key=value lines mirroring the CLI flags; '#' starts a comment."""
    out: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out
