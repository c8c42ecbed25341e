"""The repeated learner-agent interaction under four information regimes.

Each round: the environment picks an agent and reveals a context; the
learner picks a predictor; the agent best-responds; the learner observes the
true label, its own prediction and setting-dependent feedback about the
original/manipulated features.  The four settings differ only in what the
context and feedback reveal:

    x-delta        context = x, feedback reveals the manipulated feature
    x-delta-after  no context, feedback reveals both features
    delta-only     no context, feedback reveals the manipulated feature
    none           no context, label-only feedback

The true label and the prediction are delivered in every setting.
"""

from __future__ import annotations

import json
import random
from enum import Enum

from .core.geometry import MetricSpace, Point, TOL
from .core.predictors import (
    Hypothesis,
    HypothesisClass,
    Predictor,
    UnionPredictor,
    positive_points,
    predict,
)
from .core.response import Agent, Ball, TieBreak, best_response, strategic_loss


class ContractViolation(RuntimeError):
    """A learner or adversary stepped outside its declared interface."""


class RealizabilityError(RuntimeError):
    """The agent stream is not consistent with any declared target."""

    def __init__(self, round_index: int, message: str):
        super().__init__(f"round {round_index}: {message}")
        self.round_index = round_index


class Setting(Enum):
    """Information regime, ordered by how much the learner gets to see."""

    X_BEFORE = "x-delta"
    XD_AFTER = "x-delta-after"
    DELTA_ONLY = "delta-only"
    BLIND = "none"

    @property
    def info_level(self) -> int:
        return _INFO_LEVEL[self]

    @property
    def reveals_x_before(self) -> bool:
        return self is Setting.X_BEFORE

    @property
    def reveals_x_after(self) -> bool:
        return self is Setting.XD_AFTER

    @property
    def reveals_delta(self) -> bool:
        return self is not Setting.BLIND

    @classmethod
    def from_name(cls, name: str) -> "Setting":
        for s in cls:
            if s.value == name:
                return s
        raise ValueError(f"unknown setting {name!r}; choose from "
                         f"{[s.value for s in cls]}")


_INFO_LEVEL = {
    Setting.X_BEFORE: 3,
    Setting.XD_AFTER: 2,
    Setting.DELTA_ONLY: 1,
    Setting.BLIND: 0,
}


class Feedback:
    """End-of-round feedback; label and prediction always, features per setting.

    Reading a feature that the active setting does not reveal raises
    ContractViolation, which is how setting declarations are enforced.
    """

    __slots__ = ("y", "y_hat", "_x", "_delta")

    def __init__(self, y: int, y_hat: int, x: Point | None, delta: Point | None):
        self.y = y
        self.y_hat = y_hat
        self._x = x
        self._delta = delta

    @property
    def mistake(self) -> bool:
        return self.y != self.y_hat

    @property
    def x(self) -> Point:
        if self._x is None:
            raise ContractViolation("original feature is not revealed in this setting")
        return self._x

    @property
    def delta(self) -> Point:
        if self._delta is None:
            raise ContractViolation("manipulated feature is not revealed in this setting")
        return self._delta

    @property
    def has_x(self) -> bool:
        return self._x is not None

    @property
    def has_delta(self) -> bool:
        return self._delta is not None


def build_feedback(setting: Setting, agent: Agent, delta: Point, y_hat: int) -> Feedback:
    if setting is Setting.XD_AFTER:
        return Feedback(agent.y, y_hat, agent.x, delta)
    if setting is Setting.BLIND:
        return Feedback(agent.y, y_hat, None, None)
    return Feedback(agent.y, y_hat, None, delta)


class RoundRecord:
    __slots__ = ("t", "context", "predictor", "delta", "y_hat", "y", "mistake")

    def __init__(self, t, context, predictor, delta, y_hat, y):
        self.t = t
        self.context = context
        self.predictor = predictor
        self.delta = delta
        self.y_hat = y_hat
        self.y = y
        self.mistake = y_hat != y


def point_str(p: Point) -> str:
    tag = p[0]
    if tag == "origin":
        return "origin"
    if tag == "perm":
        return "perm:" + "-".join(str(v) for v in p[1])
    return f"{tag}:{p[1]}"


def predictor_indices(f: Predictor) -> list:
    """Sorted class indices of a union; [] encodes the all-negative predictor."""
    if isinstance(f, UnionPredictor):
        return sorted(set(f.parts))
    if isinstance(f, Hypothesis) and not f.positive:
        return []
    raise ValueError("predictor is not a class union; cannot serialize by index")


class Transcript:
    """Full record of one simulation; replaying the seed reproduces it bit-exactly."""

    def __init__(self, setting: Setting, seed: int, T: int):
        self.setting = setting
        self.seed = seed
        self.T = T
        self.rounds: list[RoundRecord] = []
        self.mistakes = 0

    def round_dict(self, rec: RoundRecord) -> dict:
        d = {
            "t": rec.t,
            "setting": self.setting.value,
            "predictor": predictor_indices(rec.predictor),
            "y": rec.y,
            "y_hat": rec.y_hat,
            "mistake": rec.mistake,
        }
        if self.setting.reveals_x_before or self.setting.reveals_x_after:
            d["x"] = point_str(rec.context)
        if self.setting.reveals_delta:
            d["delta"] = point_str(rec.delta)
        return d

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(self.round_dict(r), sort_keys=True)
                         for r in self.rounds)


class Learner:
    """Behavioral contract every learning algorithm implements.

    ``requires`` is the minimum information level the learner needs; a
    learner may always run in a strictly more informative setting.  The
    ``conservative`` flag promises that withholding feedback from correct
    rounds leaves the chosen predictor sequence unchanged, which the test
    suite verifies by replay.
    """

    name = "learner"
    conservative = False
    requires = Setting.BLIND

    def reset(self, hclass: HypothesisClass, space: MetricSpace,
              setting: Setting, rng: random.Random) -> None:
        raise NotImplementedError

    def choose(self, context: Point | None) -> Predictor:
        raise NotImplementedError

    def observe(self, feedback: Feedback) -> None:
        raise NotImplementedError

    def finalize(self):
        raise NotImplementedError

    @property
    def finished(self) -> bool:
        """PAC learners may declare completion to stop the interaction early."""
        return False

    # white-box hooks for adaptive adversaries
    def predictor_distribution(self):
        """Exact distribution of the next choice as [(predictor, prob), ...], or None."""
        return None

    def sample_predictor(self, rng: random.Random) -> Predictor:
        """Draw from the next-choice distribution without touching learner state."""
        dist = self.predictor_distribution()
        if dist is None:
            raise NotImplementedError(f"{self.name} exposes no sampling hook")
        u = rng.random()
        acc = 0.0
        for f, p in dist:
            acc += p
            if u <= acc:
                return f
        return dist[-1][0]

    def state_version(self):
        """Counter that changes whenever the learner's state does.

        None means "no versioning": consumers must not cache per-state work.
        """
        return None


class ConstantLearner(Learner):
    """Plays one fixed predictor forever (used for validation phases and tests)."""

    name = "constant"
    conservative = True
    requires = Setting.BLIND

    def __init__(self, predictor: Predictor):
        self.predictor = predictor

    def reset(self, hclass, space, setting, rng):
        pass

    def choose(self, context):
        return self.predictor

    def observe(self, feedback):
        pass

    def finalize(self):
        return self.predictor

    def predictor_distribution(self):
        return [(self.predictor, 1.0)]

    def sample_predictor(self, rng):
        return self.predictor

    def state_version(self):
        return 0


class LearnerView:
    """What an adaptive adversary is allowed to see of the learner.

    The view grants the exact next-choice distribution when the learner
    exposes one, an M-sample empirical estimate otherwise, plus a state
    version counter so adversaries can cache their per-state analysis.
    """

    def __init__(self, learner: Learner, rng: random.Random, samples: int = 1000):
        self.learner = learner
        self.rng = rng
        self.samples = samples

    def exact_distribution(self):
        return self.learner.predictor_distribution()

    def distribution(self):
        exact = self.learner.predictor_distribution()
        if exact is not None:
            return exact
        w = 1.0 / self.samples
        return [(self.learner.sample_predictor(self.rng), w)
                for _ in range(self.samples)]

    def version(self) -> int:
        return self.learner.state_version()


class RngStreams:
    """Named independent randomness streams derived from one run seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self.learner = random.Random(f"{seed}:learner")
        self.agent = random.Random(f"{seed}:agent")
        self.tie = random.Random(f"{seed}:tie")
        self.estimate = random.Random(f"{seed}:estimate")


def _assert_recovery(space, agent, f, delta, y_hat):
    # With x in hand, the manipulated feature of a ball agent is recoverable
    # from y_hat alone: the closest positive point if predicted positive, x
    # itself otherwise.
    if y_hat == 1:
        dist = space.dist
        x = agent.x
        dmin = min(dist(x, p) for p in positive_points(f))
        assert dist(x, delta) <= dmin + TOL
        assert predict(f, delta) == 1
    else:
        assert delta == agent.x


def run_round(agent: Agent, learner: Learner, setting: Setting, space: MetricSpace,
              tie: TieBreak = TieBreak.FIXED_LOWEST,
              rng: random.Random | None = None, t: int = 1,
              check_recovery: bool = True, deliver: bool = True) -> RoundRecord:
    """Execute one protocol round and return its record."""
    context = agent.x if setting is Setting.X_BEFORE else None
    f = learner.choose(context)
    delta = best_response(space, agent, f, tie, rng)
    y_hat = predict(f, delta)
    if (check_recovery and isinstance(agent.u, Ball)
            and setting.info_level >= Setting.XD_AFTER.info_level):
        _assert_recovery(space, agent, f, delta, y_hat)
    if deliver:
        learner.observe(build_feedback(setting, agent, delta, y_hat))
    return RoundRecord(t, agent.x, f, delta, y_hat, agent.y)


def _check_setting(learner: Learner, setting: Setting) -> None:
    if setting.info_level < learner.requires.info_level:
        raise ContractViolation(
            f"learner {learner.name!r} needs setting {learner.requires.value!r} "
            f"or stronger, got {setting.value!r}")


def _agent_supply(source, learner, streams, estimation_samples):
    kind = getattr(source, "kind", None)
    if kind == "adaptive":
        view = LearnerView(learner, streams.estimate, estimation_samples)
        adv = source.fresh()
        return lambda t: adv.next_agent(view)
    if kind == "sequence":
        agents = source.agents
        def from_sequence(t):
            if t > len(agents):
                raise ValueError(f"fixed sequence has only {len(agents)} agents")
            return agents[t - 1]
        return from_sequence
    if kind == "iid":
        rng = streams.agent
        return lambda t: source.sample(rng)
    raise TypeError(f"unknown agent source kind: {kind!r}")


def run_online(source, learner: Learner, setting: Setting, T: int, seed: int,
               tie: TieBreak | None = None, record: str = "full",
               check_realizability: str = "target", check_recovery: bool = True,
               estimation_samples: int = 1000,
               withhold_correct: bool = False) -> Transcript:
    """Run T interaction rounds and return the transcript.

    ``record="counts"`` keeps only the mistake count (for long simulations).
    ``check_realizability``: "target" verifies the declared target has zero
    loss on every emitted agent, "full" additionally tracks the set of
    consistent class members, "off" disables the check.
    ``withhold_correct`` suppresses feedback on correct rounds; used by the
    conservative-learner replay test.
    """
    space: MetricSpace = source.space
    hclass: HypothesisClass = source.hclass
    tie = tie if tie is not None else getattr(source, "tie", TieBreak.FIXED_LOWEST)
    _check_setting(learner, setting)

    streams = RngStreams(seed)
    learner.reset(hclass, space, setting, streams.learner)
    next_agent = _agent_supply(source, learner, streams, estimation_samples)

    transcript = Transcript(setting, seed, T)
    full = record == "full"
    if source.target is None and check_realizability == "target":
        # no fixed target declared (adaptive adversaries that commit lazily):
        # fall back to tracking the consistent set
        check_realizability = "full"
    check_t = check_realizability == "target"
    target = hclass.union((source.target,)) if check_t else None
    consistent = list(range(len(hclass))) if check_realizability == "full" else None
    x_before = setting is Setting.X_BEFORE
    recovery = check_recovery and setting.info_level >= Setting.XD_AFTER.info_level
    tie_rng = streams.tie

    for t in range(1, T + 1):
        agent = next_agent(t)
        if check_t and strategic_loss(space, target, agent) != 0:
            raise RealizabilityError(t, "declared target misclassifies the emitted agent")
        if consistent is not None:
            consistent = [i for i in consistent
                          if strategic_loss(space, hclass.union((i,)), agent) == 0]
            if not consistent:
                raise RealizabilityError(t, "no class member is consistent with the stream")
        f = learner.choose(agent.x if x_before else None)
        delta = best_response(space, agent, f, tie, tie_rng)
        y_hat = predict(f, delta)
        mistake = y_hat != agent.y
        if recovery and isinstance(agent.u, Ball):
            _assert_recovery(space, agent, f, delta, y_hat)
        if not (withhold_correct and not mistake):
            learner.observe(build_feedback(setting, agent, delta, y_hat))
        if mistake:
            transcript.mistakes += 1
        if full:
            transcript.rounds.append(RoundRecord(t, agent.x, f, delta, y_hat, agent.y))
        if learner.finished:
            transcript.T = t
            break
    return transcript


def run_pac(source, learner: Learner, setting: Setting, T: int, seed: int,
            **kwargs):
    """T i.i.d. interaction rounds followed by finalize().

    Returns (output, transcript); the output is the learner's predictor (or
    mixture) for future use.
    """
    if getattr(source, "kind", None) != "iid":
        raise TypeError("run_pac needs an i.i.d. agent source")
    transcript = run_online(source, learner, setting, T, seed, **kwargs)
    return learner.finalize(), transcript
