"""Agent sources: hard i.i.d. families, adaptive adversaries, random streams.

Every source carries its space, its hypothesis class of singletons, the
index of a consistent target (when one is fixed up front) and a tie-break
policy.  The four i.i.d. families hide the target behind carefully tuned
manipulation budgets; the two adaptive adversaries react to the learner's
next-choice distribution through the white-box view.
"""

from __future__ import annotations

import math
import random
from typing import Sequence

from .core.geometry import (
    MetricSpace,
    ORIGIN,
    PermutationSphereSpace,
    ScaledBasisSpace,
    StarSpace,
    basis,
    iter_permutations,
    matrix_point,
    scaled_basis,
)
from .core.predictors import HypothesisClass, positive_points, singleton_class
from .core.response import Agent, Ball, Explicit, TieBreak, strategic_loss
from .protocol import ContractViolation, LearnerView

SPOT_CHECK_SAMPLES = 10_000
_validated: set = set()


class ParameterError(ValueError):
    """A family was asked for parameters outside its valid range."""


def _spot_check(family, key) -> None:
    """Verify the declared target never loses on this family.

    Exact over the support when enumerable, a 1e4-sample check otherwise;
    memoized per parameter set so repeated construction stays cheap.
    """
    if key in _validated:
        return
    target = family.hclass.union((family.target,))
    support = family.support()
    if support is not None:
        for agent, _ in support:
            if strategic_loss(family.space, target, agent) != 0:
                raise ParameterError(f"target misclassifies support atom {agent!r}")
    else:
        rng = random.Random(f"spot:{key}")
        for _ in range(SPOT_CHECK_SAMPLES):
            agent = family.sample(rng)
            if strategic_loss(family.space, target, agent) != 0:
                raise ParameterError(f"target misclassifies sampled agent {agent!r}")
    _validated.add(key)


# ---------------------------------------------------------------------------
# i.i.d. families


class FiniteIIDSource:
    """Explicit finite-support distribution over agents.

    Atoms are (agent, probability) pairs; weights must sum to 1 within
    1e-12 and the declared target must classify every atom correctly.
    """

    kind = "iid"
    tag = "finite"

    def __init__(self, space, hclass, target, atoms,
                 tie: TieBreak = TieBreak.FIXED_LOWEST):
        total = math.fsum(p for _, p in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"atom probabilities sum to {total!r}, not 1")
        self.space = space
        self.hclass = hclass
        self.target = target
        self.tie = tie
        self.atoms = list(atoms)
        self._agents = [a for a, _ in self.atoms]
        self._cum = []
        acc = 0.0
        for _, p in self.atoms:
            acc += p
            self._cum.append(acc)
        h_star = hclass.union((target,))
        for agent, _ in self.atoms:
            if strategic_loss(space, h_star, agent) != 0:
                raise ParameterError(f"target misclassifies atom {agent!r}")

    def sample(self, rng: random.Random) -> Agent:
        u = rng.random()
        for agent, bound in zip(self._agents, self._cum):
            if u <= bound:
                return agent
        return self._agents[-1]

    def support(self):
        return self.atoms


class SphereRadiusFamily:
    """Sphere positives whose manipulation radius encodes the target.

    Mass 1 - 3n*eps sits on a radius-zero negative at the origin; the rest
    draws a uniform sphere point labeled positive, with the larger radius
    r_u = sqrt(1 + alpha^2) exactly when the target coordinate is zero and
    the smaller r_l = sqrt(1 + alpha^2 - 2/z) otherwise.  Only the target
    singleton is then reachable by every positive.
    """

    kind = "iid"
    tag = "appG"
    tie = TieBreak.FIXED_LOWEST

    def __init__(self, n: int, eps: float, target: int = 0, alpha: float = 0.1,
                 validate: bool = True):
        if not 0 <= target < n:
            raise ParameterError("target index out of range")
        if eps <= 0 or 3 * n * eps > 1:
            raise ParameterError("need 0 < eps and 3*n*eps <= 1")
        self.n = n
        self.eps = eps
        self.target = target
        self.space = PermutationSphereSpace(n, alpha=alpha, with_origin=True)
        self.hclass = singleton_class([basis(i) for i in range(n)])
        self.sphere_mass = 3 * n * eps
        z, a2 = self.space.z, alpha * alpha
        self.r_u = math.sqrt(1 + a2)
        self.r_l = math.sqrt(1 + a2 - 2.0 / z)
        self._origin_agent = Agent(ORIGIN, Ball(0.0), -1)
        self._ball_u = Ball(self.r_u)
        self._ball_l = Ball(self.r_l)
        if validate:
            _spot_check(self, ("appG", n, eps, target, alpha))

    def sample(self, rng: random.Random) -> Agent:
        if rng.random() >= self.sphere_mass:
            return self._origin_agent
        vals = list(range(self.n))
        rng.shuffle(vals)
        u = self._ball_u if vals[self.target] == 0 else self._ball_l
        return Agent(("perm", tuple(vals)), u, 1)

    def support(self):
        if self.n > 8:
            return None
        atoms = [(self._origin_agent, 1 - self.sphere_mass)]
        w = self.sphere_mass / math.factorial(self.n)
        for p in iter_permutations(self.n):
            u = self._ball_u if p[self.target] == 0 else self._ball_l
            atoms.append((Agent(("perm", p), u, 1), w))
        return atoms


class SphereRankFamily:
    """Uniform sphere marginal with noisy labels; negatives reach exactly the
    singletons whose coordinate beats the target's.

    Labels are positive with probability 1 - 6*eps (radius 2, everything
    reachable) and negative otherwise, with radius tuned one coordinate step
    below the target distance.
    """

    kind = "iid"
    tag = "appI"
    tie = TieBreak.FIXED_LOWEST

    def __init__(self, n: int, eps: float, target: int = 0, alpha: float = 0.1,
                 validate: bool = True):
        if not 0 <= target < n:
            raise ParameterError("target index out of range")
        if eps <= 0 or 6 * eps > 1:
            raise ParameterError("need 0 < eps and 6*eps <= 1")
        self.n = n
        self.eps = eps
        self.target = target
        self.space = PermutationSphereSpace(n, alpha=alpha, with_origin=False)
        self.hclass = singleton_class([basis(i) for i in range(n)])
        self.neg_mass = 6 * eps
        self._pos_ball = Ball(2.0)
        z, a2 = self.space.z, alpha * alpha
        # negative radius per target coordinate value v: reaches e_j iff p[j] > v
        self._neg_balls = [Ball(math.sqrt(1 + a2 - 2.0 * (v + 1) / z))
                           for v in range(n)]
        if validate:
            _spot_check(self, ("appI", n, eps, target, alpha))

    def _agent(self, p: tuple, positive: bool) -> Agent:
        if positive:
            return Agent(("perm", p), self._pos_ball, 1)
        return Agent(("perm", p), self._neg_balls[p[self.target]], -1)

    def sample(self, rng: random.Random) -> Agent:
        vals = list(range(self.n))
        rng.shuffle(vals)
        return self._agent(tuple(vals), rng.random() >= self.neg_mass)

    def support(self):
        if self.n > 8:
            return None
        atoms = []
        nf = math.factorial(self.n)
        for p in iter_permutations(self.n):
            atoms.append((self._agent(p, True), (1 - self.neg_mass) / nf))
            atoms.append((self._agent(p, False), self.neg_mass / nf))
        return atoms


class StarSpokeFamily:
    """Star-space family: a heavy hub positive and light off-target spoke negatives.

    All agents carry radius 1, so positives can always reach a spoke and
    negatives can reach the hub but never another spoke.
    """

    kind = "iid"
    tag = "appJ"
    tie = TieBreak.FIXED_LOWEST

    def __init__(self, n: int, eps: float, target: int = 0, validate: bool = True):
        if not 0 <= target < n:
            raise ParameterError("target index out of range")
        if eps <= 0 or 3 * (n - 1) * eps > 1:
            raise ParameterError("need 0 < eps and 3*(n-1)*eps <= 1")
        self.n = n
        self.eps = eps
        self.target = target
        self.space = StarSpace(n)
        self.hclass = singleton_class([matrix_point(i) for i in range(1, n + 1)])
        self.neg_mass = 3 * (n - 1) * eps
        ball = Ball(1.0)
        self._pos_agent = Agent(matrix_point(0), ball, 1)
        self._neg_agents = [Agent(matrix_point(j + 1), ball, -1)
                            for j in range(n) if j != target]
        if validate:
            _spot_check(self, ("appJ", n, eps, target))

    def sample(self, rng: random.Random) -> Agent:
        if rng.random() >= self.neg_mass:
            return self._pos_agent
        return self._neg_agents[rng.randrange(len(self._neg_agents))]

    def support(self):
        atoms = [(self._pos_agent, 1 - self.neg_mass)]
        w = 3 * self.eps
        atoms.extend((a, w) for a in self._neg_agents)
        return atoms


class PrefixSetFamily:
    """Non-ball family: everyone starts at the hub with an explicit set.

    Positives may move anywhere; each negative's set holds the hub plus the
    spokes drawn before the target in a uniform random order, so any wrong
    singleton is reachable by half the negatives.  Ties break uniformly at
    random here.
    """

    kind = "iid"
    tag = "appK"
    tie = TieBreak.UNIFORM_RANDOM

    def __init__(self, n: int, eps: float, target: int = 0, validate: bool = True):
        if not 0 <= target < n:
            raise ParameterError("target index out of range")
        if eps <= 0 or 6 * eps > 1:
            raise ParameterError("need 0 < eps and 6*eps <= 1")
        self.n = n
        self.eps = eps
        self.target = target
        self.space = StarSpace(n)
        self.hclass = singleton_class([matrix_point(i) for i in range(1, n + 1)])
        self.neg_mass = 6 * eps
        self._hub = matrix_point(0)
        self._pos_agent = Agent(self._hub, Explicit(self.space.points), 1)
        if validate:
            _spot_check(self, ("appK", n, eps, target))

    def _neg_agent(self, order: Sequence[int]) -> Agent:
        # spokes drawn before the target, as point ids (spoke j -> index j+1)
        members = [self._hub]
        for j in order:
            if j == self.target:
                break
            members.append(matrix_point(j + 1))
        return Agent(self._hub, Explicit(members), -1)

    def sample(self, rng: random.Random) -> Agent:
        if rng.random() >= self.neg_mass:
            return self._pos_agent
        order = list(range(self.n))
        rng.shuffle(order)
        return self._neg_agent(order)

    def support(self):
        if self.n > 8:
            return None
        atoms = [(self._pos_agent, 1 - self.neg_mass)]
        w = self.neg_mass / math.factorial(self.n)
        for order in iter_permutations(self.n):
            atoms.append((self._neg_agent(order), w))
        return atoms


# ---------------------------------------------------------------------------
# adaptive adversaries


class StarCounterAdversary:
    """Counters a deterministic learner on the star space.

    All-negative predictors are punished with a manipulable hub positive;
    predictors positive at the hub with an immovable hub negative; predictors
    positive at some spoke with an immovable negative at that spoke, which
    eliminates exactly that singleton.  The adversary never eliminates the
    last consistent singleton, so the stream stays realizable at any length.
    """

    kind = "adaptive"
    tag = "star-ex42"
    tie = TieBreak.FIXED_LOWEST
    target = None

    def __init__(self, n: int):
        if n < 2:
            raise ParameterError("need at least two spokes")
        self.n = n
        self.space = StarSpace(n)
        self.hclass = singleton_class([matrix_point(i) for i in range(1, n + 1)])

    def fresh(self) -> "_StarCounterState":
        return _StarCounterState(self)


class _StarCounterState:
    def __init__(self, env: StarCounterAdversary):
        self.env = env
        self.space = env.space
        self.consistent = set(range(1, env.n + 1))  # spoke ids still realizable
        self._hub = matrix_point(0)

    def next_agent(self, view: LearnerView) -> Agent:
        dist = view.exact_distribution()
        if dist is None or len(dist) != 1 or abs(dist[0][1] - 1.0) > 1e-12:
            raise ContractViolation("this adversary needs a deterministic learner")
        f = dist[0][0]
        pos = positive_points(f)
        if not pos:
            return Agent(self._hub, Ball(1.0), 1)
        pset = set(pos)
        if self._hub in pset:
            return Agent(self._hub, Ball(0.0), -1)
        spokes = sorted(p[1] for p in pset)
        for s in spokes:
            if self.consistent != {s}:
                self.consistent.discard(s)
                return Agent(matrix_point(s), Ball(0.0), -1)
        # only the last consistent singleton is exposed: concede the round
        return Agent(self._hub, Ball(1.0), 1)


class ProbingAdversary:
    """Forces mistakes at rate ~1/(2(n+2)) against any randomized learner.

    Works on the scaled-basis space.  Each round it inspects the learner's
    next-choice distribution: any probe point (origin or scaled basis) that
    is positive with probability at least c gets an immovable negative; an
    all-negative mass of at least c gets a manipulable origin positive;
    otherwise it plants a negative at the scaled copy of the most likely
    positive basis direction, with radius 0.1 (reaching the basis point) off
    target and 0 on target.
    """

    kind = "adaptive"
    tag = "appE"
    tie = TieBreak.FIXED_LOWEST

    def __init__(self, n: int, target: int | None = None, c: float | None = None,
                 samples: int = 1000):
        if n < 2:
            raise ParameterError("need at least two basis directions")
        self.n = n
        self.target = n - 1 if target is None else target
        if not 0 <= self.target < n:
            raise ParameterError("target index out of range")
        self.c = 1.0 / (2 * (n + 2)) if c is None else c
        self.samples = samples
        self.space = ScaledBasisSpace(n)
        self.hclass = singleton_class([basis(i) for i in range(n)])

    def fresh(self) -> "_ProbingState":
        return _ProbingState(self)


class _ProbingState:
    def __init__(self, env: ProbingAdversary):
        self.env = env
        self._cached_version = None
        self._decision = None
        self._probe_points = [ORIGIN] + [scaled_basis(j) for j in range(env.n)]

    def _decide(self, view: LearnerView):
        env = self.env
        dist = view.exact_distribution()
        if dist is None:
            view.samples = env.samples
            dist = view.distribution()
        p_allneg = 0.0
        p_probe = dict.fromkeys(self._probe_points, 0.0)
        weight = [0.0] * env.n
        for f, p in dist:
            pos = positive_points(f)
            if not pos:
                p_allneg += p
                continue
            pset = set(pos)
            hit = False
            for pt in self._probe_points:
                if pt in pset:
                    p_probe[pt] += p
                    hit = True
            if not hit:
                for pt in pset:
                    if pt[0] == "basis":
                        weight[pt[1]] += p
        for pt in self._probe_points:
            if p_probe[pt] >= env.c - 1e-12:
                return ("probe", pt)
        if p_allneg >= env.c - 1e-12:
            return ("allneg",)
        i_t = max(range(env.n), key=lambda i: (weight[i], -i))
        return ("plant", i_t)

    def next_agent(self, view: LearnerView) -> Agent:
        version = view.version()
        if version is None or version != self._cached_version or self._decision is None:
            self._decision = self._decide(view)
            self._cached_version = version
        d = self._decision
        if d[0] == "probe":
            return Agent(d[1], Ball(0.0), -1)
        if d[0] == "allneg":
            return Agent(ORIGIN, Ball(1.0), 1)
        i_t = d[1]
        if i_t == self.env.target:
            return Agent(scaled_basis(i_t), Ball(0.0), -1)
        return Agent(scaled_basis(i_t), Ball(0.1), -1)


# ---------------------------------------------------------------------------
# generic realizable streams


class UniformRadius:
    def __init__(self, lo: float, hi: float):
        if lo < 0 or hi < lo:
            raise ParameterError("need 0 <= lo <= hi")
        self.lo = lo
        self.hi = hi

    def draw(self, rng: random.Random) -> float:
        return self.lo + (self.hi - self.lo) * rng.random()


class ConstantRadius:
    def __init__(self, r: float):
        if r < 0:
            raise ParameterError("radius must be nonnegative")
        self.r = r

    def draw(self, rng: random.Random) -> float:
        return self.r


def parse_radius_law(text: str):
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        lo, hi = rest.split(":")
        return UniformRadius(float(lo), float(hi))
    if kind == "const":
        return ConstantRadius(float(rest))
    raise ParameterError(f"unknown radius law {text!r}")


class SequenceSource:
    kind = "sequence"

    def __init__(self, space, hclass, target, agents, tie=TieBreak.FIXED_LOWEST):
        self.space = space
        self.hclass = hclass
        self.target = target
        self.agents = agents
        self.tie = tie


def random_realizable_stream(space: MetricSpace, hclass: HypothesisClass,
                             target: int, T: int, seed: int,
                             radius_law=None) -> SequenceSource:
    """Pre-generate T ball agents labeled by the target, so realizability
    holds by construction: x uniform over the universe, radius from the law,
    label = the target's prediction at the agent's own best response.
    """
    if not 0 <= target < len(hclass):
        raise ValueError("target must index into the hypothesis class")
    law = radius_law or UniformRadius(0.0, space.diameter() * 1.25)
    rng = random.Random(f"{seed}:stream")
    h_star = hclass[target]
    (target_point,) = h_star.positive
    dist = space.dist
    agents = []
    for _ in range(T):
        x = space.sample_point(rng)
        r = law.draw(rng)
        # singleton target: positive iff already at the point or within reach
        y = 1 if dist(x, target_point) <= r + 1e-9 else -1
        agents.append(Agent(x, Ball(r), y))
    return SequenceSource(space, hclass, target, agents)


# ---------------------------------------------------------------------------
# registry


class EnvSpec:
    """A named environment: how to build the per-run agent source."""

    def __init__(self, name, space, hclass, target, shared=None, stream_args=None):
        self.name = name
        self.space = space
        self.hclass = hclass
        self.target = target
        self.shared = shared
        self._stream_args = stream_args

    @property
    def family(self):
        """The underlying i.i.d. family, when this environment is one."""
        if self.shared is not None and getattr(self.shared, "kind", None) == "iid":
            return self.shared
        return None

    def source_for_run(self, seed: int, T: int):
        if self.shared is not None:
            return self.shared
        space, hclass, target, law = self._stream_args
        return random_realizable_stream(space, hclass, target, T, seed, law)


_STREAM_SPACES = {
    "star": lambda n, alpha: StarSpace(n),
    "scaled-basis": lambda n, alpha: ScaledBasisSpace(n),
    "sphere": lambda n, alpha: PermutationSphereSpace(n, alpha=alpha),
    "sphere-origin": lambda n, alpha: PermutationSphereSpace(n, alpha=alpha,
                                                             with_origin=True),
}


def environment_names() -> list:
    return ["star-ex42", "appE", "appG", "appI", "appJ", "appK", "random-realizable"]


def make_environment(name: str, n: int, eps: float | None = None,
                     target: int | None = None, alpha: float = 0.1,
                     c: float | None = None, samples: int = 1000,
                     stream_space: str = "star", radius_law=None,
                     validate: bool = True) -> EnvSpec:
    """Build a named environment; family parameters are checked here."""
    if name == "star-ex42":
        adv = StarCounterAdversary(n)
        return EnvSpec(name, adv.space, adv.hclass, adv.target, shared=adv)
    if name == "appE":
        adv = ProbingAdversary(n, target=target, c=c, samples=samples)
        return EnvSpec(name, adv.space, adv.hclass, adv.target, shared=adv)
    if name in ("appG", "appI", "appJ", "appK"):
        if eps is None:
            raise ParameterError(f"{name} needs eps")
        tgt = 0 if target is None else target
        cls = {"appG": SphereRadiusFamily, "appI": SphereRankFamily,
               "appJ": StarSpokeFamily, "appK": PrefixSetFamily}[name]
        if name in ("appG", "appI"):
            fam = cls(n, eps, target=tgt, alpha=alpha, validate=validate)
        else:
            fam = cls(n, eps, target=tgt, validate=validate)
        return EnvSpec(name, fam.space, fam.hclass, fam.target, shared=fam)
    if name == "random-realizable":
        if stream_space not in _STREAM_SPACES:
            raise ParameterError(f"unknown stream space {stream_space!r}")
        space = _STREAM_SPACES[stream_space](n, alpha)
        if stream_space == "star":
            hclass = singleton_class([matrix_point(i) for i in range(1, n + 1)])
        else:
            hclass = singleton_class([basis(i) for i in range(n)])
        if isinstance(radius_law, str):
            radius_law = parse_radius_law(radius_law)
        tgt = (n - 1) if target is None else target
        if not 0 <= tgt < len(hclass):
            raise ParameterError("target index out of range")
        return EnvSpec(name, space, hclass, tgt,
                       stream_args=(space, hclass, tgt, radius_law))
    raise KeyError(f"unknown environment {name!r}; known: {environment_names()}")
