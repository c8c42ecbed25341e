import math
import random
from collections import Counter

import pytest

from stratgame.core.geometry import (
    ORIGIN,
    basis,
    matrix_point,
    scaled_basis,
)
from stratgame.core.predictors import Hypothesis
from stratgame.core.response import Ball, Explicit, TieBreak, strategic_loss
from stratgame.environments import (
    ParameterError,
    PrefixSetFamily,
    ProbingAdversary,
    SphereRadiusFamily,
    SphereRankFamily,
    StarSpokeFamily,
    make_environment,
    parse_radius_law,
    random_realizable_stream,
)
from stratgame.learners import make_learner
from stratgame.protocol import (
    ConstantLearner,
    ContractViolation,
    LearnerView,
    Setting,
    run_online,
)


# ----------------------------------------------------------- star counter


def test_star_counter_vs_sequential_elimination():
    # hand simulation: each round the adversary plants an immovable negative
    # on the exposed spoke, eliminating exactly that singleton
    env = make_environment("star-ex42", 5)
    lrn = make_learner("seq-elim")
    tr = run_online(env.source_for_run(0, 4), lrn, Setting.XD_AFTER, 4, 0)
    assert tr.mistakes == 4
    assert [r.mistake for r in tr.rounds] == [True] * 4
    assert [r.context for r in tr.rounds] == [matrix_point(i) for i in (1, 2, 3, 4)]


def test_star_counter_concedes_after_full_walk():
    env = make_environment("star-ex42", 5)
    lrn = make_learner("seq-elim")
    tr = run_online(env.source_for_run(0, 10), lrn, Setting.XD_AFTER, 10, 0)
    assert tr.mistakes == 4  # rounds 5..10 are conceded hub positives
    assert all(not r.mistake for r in tr.rounds[4:])


def test_star_counter_vs_all_negative_learner():
    # a mistake every round while every singleton stays consistent
    env = make_environment("star-ex42", 6)
    lrn = ConstantLearner(Hypothesis(()))
    tr = run_online(env.source_for_run(0, 12), lrn, Setting.XD_AFTER, 12, 0,
                    check_realizability="full")
    assert tr.mistakes == 12
    agents = [(r.context, r.y) for r in tr.rounds]
    assert all(x == matrix_point(0) and y == 1 for x, y in agents)


def test_star_counter_vs_hub_positive_learner():
    env = make_environment("star-ex42", 6)
    hub_pos = Hypothesis([matrix_point(0)])
    tr = run_online(env.source_for_run(0, 8), ConstantLearner(hub_pos),
                    Setting.XD_AFTER, 8, 0, check_realizability="full")
    assert tr.mistakes == 8


def test_star_counter_agents_consistent_with_survivors():
    env = make_environment("star-ex42", 5)
    adversary = env.shared.fresh()
    learner = make_learner("seq-elim")
    learner.reset(env.hclass, env.space, Setting.XD_AFTER, random.Random(0))
    view = LearnerView(learner, random.Random(1))
    agents = []
    from stratgame.protocol import run_round
    for t in range(1, 5):
        agent = adversary.next_agent(view)
        agents.append(agent)
        run_round(agent, learner, Setting.XD_AFTER, env.space, t=t)
    for spoke in adversary.consistent:
        h = env.hclass.union((spoke - 1,))
        assert all(strategic_loss(env.space, h, a) == 0 for a in agents)


def test_star_counter_needs_deterministic_learner():
    env = make_environment("star-ex42", 4)
    lrn = make_learner("mwmr")
    with pytest.raises(ContractViolation, match="deterministic"):
        run_online(env.source_for_run(0, 3), lrn, Setting.XD_AFTER, 3, 0)


# ------------------------------------------------------- probing adversary


def _probe_agent_for(learner_predictor, n=4, target=3):
    adv = ProbingAdversary(n, target=target).fresh()
    learner = ConstantLearner(learner_predictor)
    view = LearnerView(learner, random.Random(0))
    return adv.next_agent(view)


def test_probing_case1_immovable_probe_negative():
    env = make_environment("appE", 4)
    agent = _probe_agent_for(Hypothesis([ORIGIN]))
    assert agent.x == ORIGIN and agent.u == Ball(0.0) and agent.y == -1
    agent = _probe_agent_for(Hypothesis([scaled_basis(2)]))
    assert agent.x == scaled_basis(2) and agent.u == Ball(0.0)


def test_probing_case2_manipulable_origin_positive():
    agent = _probe_agent_for(Hypothesis(()))
    assert agent.x == ORIGIN and agent.u == Ball(1.0) and agent.y == 1


def test_probing_case3_lowest_index_argmax():
    # uniform over the class puts equal weight on every basis direction:
    # the argmax tie breaks to the lowest index, planted off target
    adv = ProbingAdversary(4, target=3).fresh()
    learner = make_learner("mwmr")
    env = make_environment("appE", 4)
    learner.reset(env.hclass, env.space, Setting.XD_AFTER, random.Random(0))
    agent = adv.next_agent(LearnerView(learner, random.Random(0)))
    assert agent.x == scaled_basis(0)
    assert agent.u == Ball(0.1) and agent.y == -1


def test_probing_case3_on_target_is_immovable():
    agent = _probe_agent_for(
        Hypothesis([basis(3)]), n=4, target=3)
    assert agent.x == scaled_basis(3) and agent.u == Ball(0.0)


def test_probing_agents_consistent_with_target():
    env = make_environment("appE", 6)
    lrn = make_learner("mwmr")
    # run_online validates every emitted agent against the declared target
    tr = run_online(env.source_for_run(0, 400), lrn, Setting.XD_AFTER, 400, 0)
    assert tr.mistakes <= 5


def test_probing_with_sampled_distribution():
    # random-union exposes only the sampling hook; the adversary estimates
    env = make_environment("appE", 5, samples=200)
    lrn = make_learner("random-union")
    tr = run_online(env.source_for_run(0, 50), lrn, Setting.XD_AFTER, 50, 0)
    assert tr.T == 50  # completed without contract or realizability errors


def test_probing_forces_full_walk_of_mwmr():
    env = make_environment("appE", 8)
    counts = []
    for seed in range(20):
        lrn = make_learner("mwmr")
        tr = run_online(env.source_for_run(seed, 971), lrn, Setting.XD_AFTER,
                        971, seed, record="counts")
        counts.append(tr.mistakes)
    assert max(counts) <= 7
    assert sum(c >= 7 for c in counts) >= 14  # typically all 20


# ----------------------------------------------------------------- families


def test_family_parameter_validation():
    with pytest.raises(ParameterError):
        SphereRadiusFamily(4, 0.1)   # 3 n eps > 1
    with pytest.raises(ParameterError):
        SphereRankFamily(4, 0.2)     # 6 eps > 1
    with pytest.raises(ParameterError):
        StarSpokeFamily(4, 0.2)      # 3 (n-1) eps > 1
    with pytest.raises(ParameterError):
        PrefixSetFamily(4, 0.2)      # 6 eps > 1
    with pytest.raises(ParameterError):
        StarSpokeFamily(4, 0.01, target=7)


def test_radius_family_sampling_statistics():
    n, eps = 6, 0.02
    fam = SphereRadiusFamily(n, eps, target=2)
    rng = random.Random(0)
    draws = [fam.sample(rng) for _ in range(20_000)]
    origin_frac = sum(1 for a in draws if a.x == ORIGIN) / len(draws)
    expect = 1 - 3 * n * eps
    assert origin_frac == pytest.approx(expect, abs=4 * math.sqrt(expect * (1 - expect) / 20_000))
    for a in draws:
        if a.x == ORIGIN:
            assert a.y == -1 and a.u.radius == 0.0
        else:
            assert a.y == 1
            wide = a.x[1][2] == 0
            assert a.u.radius == (fam.r_u if wide else fam.r_l)


def test_radius_family_reach_characterization():
    # r_l < r_u, and a sphere point reaches basis j iff coordinate j is nonzero
    from itertools import permutations
    n = 5
    fam = SphereRadiusFamily(n, 0.02, target=1)
    space = fam.space
    assert fam.r_l < fam.r_u
    for p in permutations(range(n)):
        x = ("perm", p)
        for j in range(n):
            within_tight = space.dist(x, basis(j)) <= fam.r_l + 1e-9
            assert within_tight == (p[j] != 0)
            assert space.dist(x, basis(j)) <= fam.r_u + 1e-9


def test_rank_family_radii():
    fam = SphereRankFamily(5, 0.03, target=2)
    rng = random.Random(1)
    saw_negative = False
    for _ in range(2000):
        a = fam.sample(rng)
        if a.y == 1:
            assert a.u.radius == 2.0
        else:
            saw_negative = True
            assert a.u.radius > 2 * 0.1  # strictly above the sphere diameter
    assert saw_negative


def test_star_family_support_is_exact():
    fam = StarSpokeFamily(6, 0.01, target=3)
    support = fam.support()
    assert sum(p for _, p in support) == pytest.approx(1.0)
    target = fam.hclass.union((3,))
    assert all(strategic_loss(fam.space, target, a) == 0 for a, _ in support)


def test_prefix_family_structure():
    fam = PrefixSetFamily(5, 0.05, target=2)
    assert fam.tie is TieBreak.UNIFORM_RANDOM
    rng = random.Random(3)
    for _ in range(2000):
        a = fam.sample(rng)
        assert a.x == matrix_point(0)
        if a.y == -1:
            assert isinstance(a.u, Explicit)
            assert matrix_point(0) in a.u.members
            assert matrix_point(3) not in a.u.members  # the target spoke


def test_prefix_family_prefix_probabilities():
    # P(wrong spoke j reachable) = P(j before target) = 1/2
    fam = PrefixSetFamily(4, 1 / 6, target=0)
    support = fam.support()
    total = sum(p for a, p in support
                if a.y == -1 and matrix_point(2) in a.u.members)
    assert total == pytest.approx((6 * 1 / 6) * 0.5)


def test_random_stream_labels_are_realizable():
    env = make_environment("random-realizable", 6, stream_space="scaled-basis",
                           target=4)
    src = env.source_for_run(9, 300)
    h = env.hclass.union((4,))
    assert all(strategic_loss(env.space, h, a) == 0 for a in src.agents)


def test_random_stream_replays_identically():
    env = make_environment("random-realizable", 6, stream_space="star")
    a = env.source_for_run(5, 50).agents
    b = env.source_for_run(5, 50).agents
    assert [(x.x, x.u.radius, x.y) for x in a] == [(x.x, x.u.radius, x.y) for x in b]


def test_random_stream_rejects_foreign_target():
    env = make_environment("random-realizable", 4, stream_space="star")
    with pytest.raises(ValueError, match="index into"):
        random_realizable_stream(env.space, env.hclass, 9, 10, 0)
    with pytest.raises(ParameterError):
        make_environment("random-realizable", 4, target=17)


def test_radius_law_parsing():
    law = parse_radius_law("uniform:0.5:2.0")
    rng = random.Random(0)
    draws = [law.draw(rng) for _ in range(100)]
    assert all(0.5 <= d <= 2.0 for d in draws)
    assert parse_radius_law("const:1.5").draw(rng) == 1.5
    with pytest.raises(ParameterError):
        parse_radius_law("poisson:3")


def test_environment_registry():
    with pytest.raises(KeyError):
        make_environment("labyrinth", 4)
    with pytest.raises(ParameterError):
        make_environment("appG", 4)  # missing eps
    for name in ("appG", "appI", "appJ", "appK"):
        env = make_environment(name, 4, eps=0.02, target=1)
        assert env.family is not None and env.family.tag == name


def test_sphere_families_sample_uniform_permutations():
    fam = SphereRankFamily(4, 0.02, target=0)
    rng = random.Random(0)
    counts = Counter(fam.sample(rng).x[1] for _ in range(12_000))
    assert len(counts) == 24
    for c in counts.values():
        assert c / 12_000 == pytest.approx(1 / 24, abs=0.01)


def test_large_sphere_family_has_no_enumerable_support():
    from stratgame.core.response import population_loss

    fam = SphereRadiusFamily(9, 0.01, target=0)
    assert fam.support() is None
    with pytest.raises(ValueError, match="monte_carlo_loss"):
        population_loss(fam.space, fam.hclass.union((0,)), fam)


def test_sphere_transcript_serializes_perm_points():
    import json
    from stratgame.protocol import run_online as _run

    env = make_environment("appG", 4, eps=0.02, target=3)
    lrn = make_learner("random-union")
    tr = _run(env.source_for_run(0, 30), lrn, Setting.XD_AFTER, 30, 0)
    payload = [json.loads(line) for line in tr.to_jsonl().splitlines()]
    perm_rows = [r for r in payload if r["x"].startswith("perm:")]
    assert perm_rows, "expected sphere draws in 30 rounds"
    for r in perm_rows:
        values = r["x"].split(":", 1)[1].split("-")
        assert sorted(int(v) for v in values) == [0, 1, 2, 3]


def test_finite_iid_source_validation_and_sampling():
    from stratgame.core.geometry import StarSpace
    from stratgame.core.predictors import singleton_class
    from stratgame.core.response import Agent, Ball
    from stratgame.environments import FiniteIIDSource

    space = StarSpace(4)
    hclass = singleton_class([matrix_point(i) for i in range(1, 5)])
    atoms = [(Agent(matrix_point(0), Ball(1.0), 1), 0.8),
             (Agent(matrix_point(2), Ball(0.0), -1), 0.2)]
    src = FiniteIIDSource(space, hclass, 0, atoms)
    rng = random.Random(0)
    draws = [src.sample(rng) for _ in range(5000)]
    frac = sum(1 for a in draws if a.y == 1) / len(draws)
    assert frac == pytest.approx(0.8, abs=0.03)
    with pytest.raises(ParameterError, match="sum"):
        FiniteIIDSource(space, hclass, 0, [(atoms[0][0], 0.5)])
    with pytest.raises(ParameterError, match="misclassifies"):
        # the spoke-2 negative is exactly where singleton index 1 is positive
        FiniteIIDSource(space, hclass, 1, atoms)


def test_point_mass_positive_gives_zero_output_loss():
    from stratgame.core.geometry import StarSpace
    from stratgame.core.predictors import singleton_class
    from stratgame.core.response import Agent, Ball, population_loss
    from stratgame.environments import FiniteIIDSource
    from stratgame.protocol import run_pac

    space = StarSpace(4)
    hclass = singleton_class([matrix_point(i) for i in range(1, 5)])
    src = FiniteIIDSource(space, hclass, 2,
                          [(Agent(matrix_point(0), Ball(1.0), 1), 1.0)])
    out, _ = run_pac(src, make_learner("random-union"), Setting.XD_AFTER, 40, 0)
    assert population_loss(space, out, src) == 0.0
