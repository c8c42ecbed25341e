"""Agents, manipulation sets, best response and the strategic loss.

An agent is a triple (x, u, y): original feature, manipulation set and true
label.  Facing a deployed predictor f, an agent that is predicted negative
at x moves to a positive point of its manipulation set if one exists (the
closest one, for ball manipulations) and stays put otherwise.  The loss of f
on the agent is the 0/1 error at the manipulated feature; it depends only on
whether u meets the positive region, never on which point ties resolve to.
"""

from __future__ import annotations

import math
import random
from enum import Enum
from typing import Iterable, Sequence

from .geometry import MetricSpace, Point, TOL
from .predictors import Predictor, positive_points, predict


class Ball:
    """Metric ball of the given radius around the agent's own feature."""

    __slots__ = ("radius",)

    def __init__(self, radius: float):
        if radius < 0:
            raise ValueError("ball radius must be nonnegative")
        self.radius = radius

    def __repr__(self):
        return f"Ball({self.radius!r})"

    def __eq__(self, other):
        return isinstance(other, Ball) and self.radius == other.radius


class Explicit:
    """An arbitrary finite manipulation set, listed point by point."""

    __slots__ = ("members",)

    def __init__(self, members: Iterable[Point]):
        self.members = frozenset(members)

    def __repr__(self):
        return f"Explicit({sorted(self.members)!r})"

    def __eq__(self, other):
        return isinstance(other, Explicit) and self.members == other.members


ManipulationSet = Ball | Explicit


class Agent:
    __slots__ = ("x", "u", "y")

    def __init__(self, x: Point, u: ManipulationSet, y: int):
        if y not in (1, -1):
            raise ValueError("label must be +1 or -1")
        if isinstance(u, Explicit) and x not in u.members:
            raise ValueError("explicit manipulation sets must contain the agent's own feature")
        self.x = x
        self.u = u
        self.y = y

    def __repr__(self):
        return f"Agent(x={self.x!r}, u={self.u!r}, y={self.y:+d})"


class TieBreak(Enum):
    FIXED_LOWEST = "fixed-lowest"
    UNIFORM_RANDOM = "uniform-random"


def _reachable_positives(space: MetricSpace, agent: Agent, f: Predictor):
    """Points of u intersected with the positive region, with distances for balls.

    Returns (candidates, dists) where dists is None for explicit sets.
    """
    pos = positive_points(f)
    if isinstance(agent.u, Ball):
        r = agent.u.radius
        cand, dists = [], []
        dist = space.dist
        for p in pos:
            d = dist(agent.x, p)
            if d <= r + TOL:
                cand.append(p)
                dists.append(d)
        return cand, dists
    members = agent.u.members
    return [p for p in pos if p in members], None


def best_response(space: MetricSpace, agent: Agent, f: Predictor,
                  tie: TieBreak = TieBreak.FIXED_LOWEST,
                  rng: random.Random | None = None) -> Point:
    """The feature the agent presents against predictor f.

    Already-positive agents and agents whose manipulation set misses the
    positive region stay at x.  Ball agents move to the closest reachable
    positive point (ties by point order or uniformly at random); explicit
    agents pick any reachable positive point by the same policy, with no
    distance preference.
    """
    if predict(f, agent.x) == 1:
        return agent.x
    cand, dists = _reachable_positives(space, agent, f)
    if not cand:
        return agent.x
    if dists is not None:
        dmin = min(dists)
        cand = [p for p, d in zip(cand, dists) if d <= dmin + TOL]
    if len(cand) == 1:
        return cand[0]
    if tie is TieBreak.FIXED_LOWEST:
        return min(cand)
    if rng is None:
        raise ValueError("uniform tie-breaking needs a randomness stream")
    cand.sort()  # decouple the draw from set iteration order
    return cand[rng.randrange(len(cand))]


def strategic_loss(space: MetricSpace, f: Predictor, agent: Agent) -> int:
    """0/1 loss of f at the agent's manipulated feature.

    Case split: a negative agent loses if predicted positive at x or able to
    reach the positive region; a positive agent loses only when predicted
    negative and unable to reach.  The value is tie-break invariant because
    it depends on u meeting the positive region, not on the point chosen.
    """
    fx = predict(f, agent.x)
    if agent.y == -1:
        if fx == 1:
            return 1
        cand, _ = _reachable_positives(space, agent, f)
        return 1 if cand else 0
    if fx == 1:
        return 0
    cand, _ = _reachable_positives(space, agent, f)
    return 0 if cand else 1


def strategic_loss_randomized(space: MetricSpace,
                              mixture: Sequence[tuple],
                              agent: Agent) -> float:
    """Expected strategic loss of a finite mixture [(predictor, weight), ...]."""
    total = math.fsum(w for _, w in mixture)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"mixture weights sum to {total!r}, not 1")
    return math.fsum(w * strategic_loss(space, f, agent) for f, w in mixture)


def population_loss(space: MetricSpace, f: Predictor, source) -> float:
    """Exact expected strategic loss over an enumerable i.i.d. support.

    ``source`` must expose ``support()`` returning [(agent, probability), ...];
    sources with non-enumerable support return None there and must be
    estimated with the Monte Carlo estimator instead.
    """
    support = source.support()
    if support is None:
        raise ValueError("support is not enumerable; use monte_carlo_loss")
    return math.fsum(p * strategic_loss(space, f, agent) for agent, p in support)
