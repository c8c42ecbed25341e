import json
import math
import random
from fractions import Fraction

import pytest

from stratgame.environments import make_environment
from stratgame.harness import (
    ExperimentConfig,
    aggregate_rows,
    emit_report,
    monte_carlo_loss,
    parse_config_file,
    run_experiment,
)
from stratgame.oracle import exact_loss


def test_monte_carlo_on_target_is_exactly_zero():
    env = make_environment("appG", 6, eps=0.02, target=1)
    fam = env.family
    est, se = monte_carlo_loss(fam.space, fam.hclass.union((1,)), fam, 2000, 0)
    assert est == 0.0 and se == 0.0


def test_monte_carlo_wrong_singleton_star_family():
    env = make_environment("appJ", 10, eps=0.01, target=3)
    fam = env.family
    est, se = monte_carlo_loss(fam.space, fam.hclass.union((0,)), fam, 100_000, 1)
    assert se <= 0.002
    assert est == pytest.approx(0.03, abs=4 * math.sqrt(0.03 * 0.97 / 100_000))


def test_monte_carlo_agrees_with_oracle_on_random_predictors():
    rng = random.Random(2)
    n, N = 6, 20_000
    for tag in ("appG", "appJ", "appK"):
        env = make_environment(tag, n, eps=0.02, target=4)
        fam = env.family
        for k in range(16):
            parts = tuple(rng.choices(range(n), k=rng.randint(1, 3)))
            f = fam.hclass.union(parts)
            exact = float(exact_loss(tag, n, Fraction(0.02), 4, f))
            est, _ = monte_carlo_loss(fam.space, f, fam, N, seed=k)
            slack = 4 * math.sqrt(max(exact * (1 - exact), 1e-12) / N)
            assert abs(est - exact) <= slack + 1e-12, (tag, parts)


def test_monte_carlo_needs_samples():
    env = make_environment("appJ", 4, eps=0.02)
    with pytest.raises(ValueError):
        monte_carlo_loss(env.space, env.hclass.union((0,)), env.family, 0, 0)


def _small_cfg(**over):
    base = dict(env="random-realizable", learner="halving", setting="x-delta",
                n=32, T=300, seeds=[0, 1, 2, 3], stream_space="star",
                bounds=[{"name": "halving-mistake-bound"}])
    base.update(over)
    return ExperimentConfig(**base)


def test_run_experiment_halving_bound_passes():
    report = run_experiment(_small_cfg())
    assert report.all_bounds_pass
    entry = report.bounds[0]
    assert set(entry) == {"name", "value", "observed", "pass"}
    assert entry["value"] == 5.0  # ceil(log2 32)
    assert report.aggregate["max_mistakes"] <= 5


def test_run_experiment_failing_bound():
    cfg = _small_cfg(bounds=[{"name": "exact-mistake-count", "count": 999}])
    report = run_experiment(cfg)
    assert not report.all_bounds_pass


def test_exact_mistake_bound_on_star_counter():
    cfg = ExperimentConfig(env="star-ex42", learner="seq-elim",
                           setting="x-delta-after", n=10, T=9, seeds=[0, 1, 2],
                           bounds=[{"name": "exact-mistake-count", "count": 9}])
    report = run_experiment(cfg)
    assert report.all_bounds_pass


def test_pac_mode_measures_output_loss():
    cfg = ExperimentConfig(env="appJ", learner="survivor:seq-elim",
                           setting="delta-only", n=6, T=200, seeds=[0, 1],
                           eps=0.25, delta=0.2, env_eps=0.02, target=5,
                           bounds=[{"name": "loss-quantile", "limit": 0.25,
                                    "fraction": 0.9}])
    report = run_experiment(cfg)
    assert all(r["output_loss"] is not None for r in report.rows)
    assert report.all_bounds_pass


def test_aggregates_recompute_identically():
    report = run_experiment(_small_cfg())
    again = report.regenerate()
    assert again.to_dict() == report.to_dict()
    assert aggregate_rows(report.rows) == report.aggregate


def test_json_report_round_trips():
    report = run_experiment(_small_cfg(seeds=[0, 1]))
    payload = emit_report(report, "json")
    parsed = json.loads(payload)
    assert (json.dumps(parsed, sort_keys=True, indent=2) + "\n").encode() == payload
    assert parsed["schema_version"] == 1
    assert parsed["config"]["env"] == "random-realizable"


def test_csv_summary_shape():
    report = run_experiment(_small_cfg(seeds=[0, 1]))
    lines = emit_report(report, "csv-summary").decode().splitlines()
    assert lines[0] == "seed,mistakes,rounds,output_loss"
    assert len(lines) == 4  # header, two seeds, aggregate
    assert lines[-1].startswith("aggregate,")


def test_csv_empty_seed_list_is_header_only():
    cfg = _small_cfg(seeds=[], bounds=[])
    report = run_experiment(cfg)
    assert emit_report(report, "csv-summary").decode() == "seed,mistakes,rounds,output_loss\n"


def test_unknown_format_rejected():
    report = run_experiment(_small_cfg(seeds=[0]))
    with pytest.raises(ValueError):
        emit_report(report, "yaml")


def test_parallel_rows_match_serial():
    cfg = _small_cfg(seeds=[0, 1, 2, 3, 4, 5])
    serial = run_experiment(cfg, threads=1)
    parallel = run_experiment(cfg, threads=2)
    assert serial.rows == parallel.rows
    assert serial.aggregate == parallel.aggregate


def test_mwmr_bound_formula():
    cfg = ExperimentConfig(env="random-realizable", learner="mwmr",
                           setting="x-delta-after", n=16, T=256,
                           seeds=list(range(8)), stream_space="star",
                           bounds=[{"name": "mwmr-expected-mistake-bound"}])
    report = run_experiment(cfg)
    expect = min(math.sqrt(4 * math.log(16) * 256), 15.0)
    assert report.bounds[0]["value"] == pytest.approx(expect)
    assert report.all_bounds_pass


def test_adversary_floor_bound():
    n, delta = 6, 0.25
    T = math.ceil(5 * n * math.log(n / delta) * (n - 1))
    cfg = ExperimentConfig(env="appE", learner="mwmr", setting="x-delta-after",
                           n=n, T=T, seeds=list(range(20)), delta=delta,
                           bounds=[{"name": "adversary-mistake-floor",
                                    "delta": delta, "fraction": 0.7}])
    report = run_experiment(cfg)
    assert report.all_bounds_pass


def test_config_file_parsing():
    text = """
    # experiment sheet
    env = appJ
    learner = survivor:seq-elim
    setting = delta-only
    n = 6
    T = 120
    eps = 0.25
    env-eps = 0.02   # family epsilon
    delta = 0.2
    seeds = 0,1
    """
    values = parse_config_file(text)
    assert values["env"] == "appJ"
    assert values["env-eps"] == "0.02"
    with pytest.raises(ValueError):
        parse_config_file("just some words\n")


def test_unknown_bound_name_rejected():
    cfg = _small_cfg(bounds=[{"name": "lower-is-better"}])
    with pytest.raises(KeyError):
        run_experiment(cfg)
