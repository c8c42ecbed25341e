import math
import random

from hypothesis import given, settings
import hypothesis.strategies as st

from stratgame.core.geometry import (
    MatrixSpace,
    StarSpace,
    matrix_point,
    validate_metric,
)
from stratgame.core.predictors import distance_to_hypothesis, predict, singleton_class
from stratgame.core.response import Agent, Ball, Explicit, TieBreak, best_response, strategic_loss
from stratgame.environments import make_environment
from stratgame.learners import make_learner
from stratgame.protocol import RngStreams, Setting, run_online, run_round


@st.composite
def euclidean_space(draw):
    n = draw(st.integers(min_value=2, max_value=12))
    seed = draw(st.integers(min_value=0, max_value=10_000))
    rng = random.Random(seed)
    coords = [(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]
    pts = [matrix_point(i) for i in range(n)]
    space = MatrixSpace.from_metric(
        pts, lambda a, b: math.dist(coords[a[1]], coords[b[1]]))
    return space


@settings(max_examples=30, deadline=None)
@given(euclidean_space())
def test_embedded_spaces_satisfy_metric_axioms(space):
    validate_metric(space)


@settings(max_examples=60, deadline=None)
@given(euclidean_space(), st.integers(0, 10_000))
def test_best_response_and_loss_agree(space, seed):
    rng = random.Random(seed)
    pts = space.points
    k = len(pts)
    hclass = singleton_class(pts)
    x = pts[rng.randrange(k)]
    if rng.random() < 0.5:
        u = Ball(rng.random() * 2.0)
    else:
        u = Explicit({x} | {p for p in pts if rng.random() < 0.3})
    agent = Agent(x, u, rng.choice((1, -1)))
    f = hclass.union(tuple(rng.sample(range(k), rng.randint(1, min(3, k)))))
    tie = rng.choice((TieBreak.FIXED_LOWEST, TieBreak.UNIFORM_RANDOM))
    delta = best_response(space, agent, f, tie, rng)
    # the response stays inside the manipulation set
    if isinstance(u, Ball):
        assert space.dist(x, delta) <= u.radius + 1e-9
    else:
        assert delta in u.members
    # the loss formula equals the protocol-level mistake indicator
    assert strategic_loss(space, f, agent) == int(predict(f, delta) != agent.y)


@settings(max_examples=60, deadline=None)
@given(euclidean_space(), st.integers(0, 10_000))
def test_ball_response_minimality(space, seed):
    rng = random.Random(seed)
    pts = space.points
    hclass = singleton_class(pts)
    x = pts[rng.randrange(len(pts))]
    agent = Agent(x, Ball(rng.random() * 1.5), 1)
    k = rng.randint(1, min(3, len(pts)))
    f = hclass.union(tuple(rng.sample(range(len(pts)), k)))
    delta = best_response(space, agent, f)
    for p in pts:
        if predict(f, p) == 1 and space.dist(x, p) <= agent.u.radius + 1e-9:
            assert space.dist(x, delta) <= space.dist(x, p) + 1e-9


@settings(max_examples=60, deadline=None)
@given(euclidean_space(), st.integers(0, 10_000))
def test_union_distance_is_min_of_parts(space, seed):
    rng = random.Random(seed)
    pts = space.points
    hclass = singleton_class(pts)
    k = len(pts)
    parts = tuple(rng.sample(range(k), rng.randint(1, min(4, k))))
    x = pts[rng.randrange(k)]
    f = hclass.union(parts)
    d_union = distance_to_hypothesis(space, x, f)
    d_parts = min(distance_to_hypothesis(space, x, hclass.union((i,)))
                  for i in parts)
    assert abs(d_union - d_parts) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 5_000), st.integers(3, 16))
def test_strategic_loss_is_tie_policy_invariant(seed, n):
    space = StarSpace(n)
    hclass = singleton_class([matrix_point(i) for i in range(1, n + 1)])
    rng = random.Random(seed)
    pts = space.points
    for _ in range(20):
        x = pts[rng.randrange(len(pts))]
        u = Ball(rng.random() * 2.5) if rng.random() < 0.5 else Explicit(
            {x} | {p for p in pts if rng.random() < 0.4})
        agent = Agent(x, u, rng.choice((1, -1)))
        f = hclass.union(tuple(rng.sample(range(n), rng.randint(1, 3))))
        # identical by construction: the loss never inspects the chosen point
        assert strategic_loss(space, f, agent) == strategic_loss(space, f, agent)
        r1 = best_response(space, agent, f, TieBreak.FIXED_LOWEST)
        r2 = best_response(space, agent, f, TieBreak.UNIFORM_RANDOM, rng)
        assert predict(f, r1) == predict(f, r2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2_000), st.integers(4, 32))
def test_halving_contracts_on_every_mistake(seed, n):
    env = make_environment("random-realizable", n, stream_space="star",
                           target=n - 1)
    src = env.source_for_run(seed, 60)
    lrn = make_learner("halving")
    streams = RngStreams(seed)
    lrn.reset(src.hclass, src.space, Setting.X_BEFORE, streams.learner)
    mistakes = 0
    for t, agent in enumerate(src.agents, start=1):
        before = len(lrn.alive_indices)
        rec = run_round(agent, lrn, Setting.X_BEFORE, src.space,
                        rng=streams.tie, t=t)
        if rec.mistake:
            mistakes += 1
            assert len(lrn.alive_indices) <= before // 2
    assert mistakes <= math.ceil(math.log2(n))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1_000))
def test_eliminators_keep_target_alive(seed):
    rng = random.Random(seed)
    n = rng.randint(4, 10)
    target = rng.randrange(n)
    env = make_environment("random-realizable", n, stream_space="scaled-basis",
                           target=target)
    for name, setting in (("mwmr", Setting.XD_AFTER),
                          ("random-union", Setting.XD_AFTER)):
        lrn = make_learner(name)
        run_online(env.source_for_run(seed, 40), lrn, setting, 40, seed)
        assert target in lrn.alive_indices
