"""Learning algorithms: version-space eliminators and PAC wrappers.

All eliminators keep a version space of class indices still consistent with
the mistake rounds seen so far.  On ball manipulations a mistake at (x, f)
orders the class by distance to x and cuts on the side of d(x, f): a missed
positive proves the target is closer than f, a false positive proves it is
farther.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .core.geometry import TOL
from .core.predictors import ClassDistanceIndex
from .protocol import ContractViolation, Feedback, Learner, RealizabilityError, Setting


def _remove_by_distance(row: np.ndarray, alive: np.ndarray, d_f: float, y: int
                        ) -> np.ndarray:
    """Survivors of a mistake round: y=+1 drops the far side, y=-1 the near side."""
    if y == 1:
        keep = row[alive] < d_f - TOL
    else:
        keep = row[alive] > d_f + TOL
    return alive[keep]


class _VersionSpaceLearner(Learner):
    """Shared machinery: alive-index bookkeeping and distance-based removal."""

    def reset(self, hclass, space, setting, rng):
        self.hclass = hclass
        self.space = space
        self.setting = setting
        self.rng = rng
        self.index = ClassDistanceIndex(space, hclass)
        self.alive = np.arange(len(hclass))
        self.rounds_seen = 0
        self._version = 0
        self._ctx = None
        self._last_choice = None

    @property
    def alive_indices(self) -> tuple:
        return tuple(int(i) for i in self.alive)

    def state_version(self):
        return self._version

    def _mistake_x(self, feedback: Feedback):
        return self._ctx if self._ctx is not None else feedback.x

    def _apply_removal(self, x, d_f, y):
        survivors = _remove_by_distance(self.index.row(x), self.alive, d_f, y)
        if survivors.size == 0:
            raise RealizabilityError(
                self.rounds_seen, "version space emptied; stream is not realizable")
        if survivors.size != self.alive.size:
            self.alive = survivors
            self._version += 1

    def finalize(self):
        if self._last_choice is not None:
            return self._last_choice
        return self.hclass.union((int(self.alive[0]),))


class MedianHalvingLearner(_VersionSpaceLearner):
    """Plays the alive hypothesis whose distance to the revealed x is the median.

    Needs the original feature before choosing, and ball manipulations.  Each
    mistake then removes at least half of the version space, so mistakes are
    bounded by ceil(log2 |H|).
    """

    name = "halving"
    conservative = True
    requires = Setting.X_BEFORE

    def reset(self, hclass, space, setting, rng):
        if setting is not Setting.X_BEFORE:
            raise ContractViolation("halving needs the original feature before choosing")
        super().reset(hclass, space, setting, rng)
        self._mask = np.ones(len(hclass), dtype=bool)

    def choose(self, context):
        if context is None:
            raise ContractViolation("halving called without a revealed feature")
        self._ctx = context
        order = self.index.order(context)
        ranked = order[self._mask[order]]
        m = ranked.size
        chosen = int(ranked[(m + 1) // 2 - 1])  # 1-indexed rank ceil(m/2)
        self._chosen_idx = chosen
        self._last_choice = self.hclass.union((chosen,))
        return self._last_choice

    def observe(self, feedback):
        self.rounds_seen += 1
        if not feedback.mistake:
            return
        x = self._ctx
        d_f = float(self.index.row(x)[self._chosen_idx])
        before = self.alive
        self._apply_removal(x, d_f, feedback.y)
        if self.alive.size != before.size:
            self._mask[:] = False
            self._mask[self.alive] = True


class RandomVersionSpaceLearner(_VersionSpaceLearner):
    """Uniform random alive hypothesis each round; eliminates on mistake rounds only."""

    name = "mwmr"
    conservative = True
    requires = Setting.XD_AFTER

    def choose(self, context):
        self._ctx = context
        chosen = int(self.alive[self.rng.randrange(self.alive.size)])
        self._chosen_idx = chosen
        self._last_choice = self.hclass.union((chosen,))
        return self._last_choice

    def observe(self, feedback):
        self.rounds_seen += 1
        if not feedback.mistake:
            return
        x = self._mistake_x(feedback)
        d_f = float(self.index.row(x)[self._chosen_idx])
        self._apply_removal(x, d_f, feedback.y)

    def predictor_distribution(self):
        p = 1.0 / self.alive.size
        return [(self.hclass.union((int(i),)), p) for i in self.alive]

    def sample_predictor(self, rng):
        return self.hclass.union((int(self.alive[rng.randrange(self.alive.size)]),))


class RandomUnionLearner(_VersionSpaceLearner):
    """Plays a union of randomly sampled alive hypotheses; improper output.

    Each round draws a size k uniformly from {1, 2, 4, ..., 2^(floor(log2 n)-1)}
    (k = 1 when a single hypothesis remains), then k members i.i.d. with
    replacement, and predicts their union.  Mistake rounds eliminate exactly
    as the single-hypothesis rule does, with d(x, f) the minimum over parts.
    The final output unions two hypotheses sampled from the version space of
    a uniformly random past round.
    """

    name = "random-union"
    conservative = False
    requires = Setting.XD_AFTER

    def reset(self, hclass, space, setting, rng):
        super().reset(hclass, space, setting, rng)
        self._alive_list = list(range(len(hclass)))
        self._segments = [(1, tuple(self._alive_list))]  # version space entering round t

    @staticmethod
    def _draw_k(n_t: int, rng: random.Random) -> int:
        if n_t <= 1:
            return 1
        return 1 << rng.randint(0, n_t.bit_length() - 2)

    def choose(self, context):
        self._ctx = context
        rng = self.rng
        k = self._draw_k(len(self._alive_list), rng)
        parts = tuple(rng.choices(self._alive_list, k=k))
        self._last_choice = self.hclass.union(parts)
        return self._last_choice

    def observe(self, feedback):
        self.rounds_seen += 1
        if not feedback.mistake:
            return
        x = self._mistake_x(feedback)
        row = self.index.row(x)
        d_f = min(float(row[i]) for i in set(self._last_choice.parts))
        before = self.alive.size
        self._apply_removal(x, d_f, feedback.y)
        if self.alive.size != before:
            self._alive_list = [int(i) for i in self.alive]
            self._segments.append((self.rounds_seen + 1, tuple(self._alive_list)))

    def version_space_before(self, t: int) -> tuple:
        members = self._segments[0][1]
        for start, alive in self._segments:
            if start > t:
                break
            members = alive
        return members

    def finalize(self):
        if self.rounds_seen == 0:
            raise ContractViolation("cannot finalize before any interaction")
        rng = self.rng
        tau = rng.randint(1, self.rounds_seen)
        members = self.version_space_before(tau)
        h1, h2 = rng.choices(members, k=2)
        return self.hclass.union((h1, h2))

    def sample_predictor(self, rng):
        k = self._draw_k(len(self._alive_list), rng)
        return self.hclass.union(tuple(rng.choices(self._alive_list, k=k)))


class SequentialElimination(Learner):
    """Tries class members in index order, discarding one per mistake.

    Works in every setting since it reads only the label and the prediction;
    at most |H| - 1 mistakes on realizable streams.
    """

    name = "seq-elim"
    conservative = True
    requires = Setting.BLIND

    def reset(self, hclass, space, setting, rng):
        self.hclass = hclass
        self.alive = list(range(len(hclass)))
        self.rounds_seen = 0
        self._version = 0

    @property
    def alive_indices(self) -> tuple:
        return tuple(self.alive)

    def choose(self, context):
        return self.hclass.union((self.alive[0],))

    def observe(self, feedback):
        self.rounds_seen += 1
        if feedback.mistake:
            self.alive.pop(0)
            self._version += 1
            if not self.alive:
                raise RealizabilityError(
                    self.rounds_seen, "all hypotheses discarded; stream is not realizable")

    def finalize(self):
        return self.hclass.union((self.alive[0],))

    def predictor_distribution(self):
        return [(self.hclass.union((self.alive[0],)), 1.0)]

    def sample_predictor(self, rng):
        return self.hclass.union((self.alive[0],))

    def state_version(self):
        return self._version


@dataclass
class SurvivorConfig:
    """Parameters of the mistake-bound to PAC conversion.

    ``budget`` bounds how many distinct predictors the wrapped conservative
    learner can emit; the output is the first predictor surviving
    ceil((1/epsilon) * ln(budget/delta)) consecutive rounds.
    """

    budget: int
    epsilon: float
    delta: float
    threshold: int = field(default=0)

    def __post_init__(self):
        if self.threshold <= 0:
            self.threshold = math.ceil(
                math.log(self.budget / self.delta) / self.epsilon)
        if self.threshold < 1:
            raise ValueError("survival threshold must be at least 1")

    @property
    def recommended_rounds(self) -> int:
        return self.budget * self.threshold


class LongestSurvivor(Learner):
    """PAC wrapper: output the first predictor the base keeps for long enough."""

    name = "survivor"
    conservative = True

    def __init__(self, base: Learner, config: SurvivorConfig):
        if not base.conservative:
            raise ContractViolation("longest-survivor needs a conservative base learner")
        self.base = base
        self.config = config
        self.name = f"survivor:{base.name}"
        self.requires = base.requires

    def reset(self, hclass, space, setting, rng):
        self.base.reset(hclass, space, setting, rng)
        self._streak = 0
        self._prev_key = None
        self._last = None
        self._frozen = None

    def choose(self, context):
        f = self.base.choose(context)
        key = f.key()
        self._streak = self._streak + 1 if key == self._prev_key else 1
        self._prev_key = key
        self._last = f
        if self._frozen is None and self._streak >= self.config.threshold:
            self._frozen = f
        return f

    def observe(self, feedback):
        self.base.observe(feedback)

    def finalize(self):
        return self._frozen if self._frozen is not None else self._last

    def predictor_distribution(self):
        return self.base.predictor_distribution()

    def sample_predictor(self, rng):
        return self.base.sample_predictor(rng)

    def state_version(self):
        return self.base.state_version()

    @property
    def alive_indices(self):
        return self.base.alive_indices


@dataclass
class BoostConfig:
    """Confidence amplification parameters.

    Defaults: rounds = ceil(ln(2/delta)) and validation size
    m0 = ceil(3 ln(4 R / delta) / (2 epsilon)); both can be overridden.
    """

    epsilon: float
    delta: float
    base_rounds: int
    outer_rounds: int = 0
    validation_rounds: int = 0

    def __post_init__(self):
        if self.outer_rounds <= 0:
            self.outer_rounds = math.ceil(math.log(2.0 / self.delta))
        if self.validation_rounds <= 0:
            self.validation_rounds = math.ceil(
                3.0 * math.log(4.0 * self.outer_rounds / self.delta)
                / (2.0 * self.epsilon))

    @property
    def max_rounds(self) -> int:
        return self.outer_rounds * (self.base_rounds + self.validation_rounds)


class BoostLearner(Learner):
    """Amplifies an expected-loss base learner to a high-probability one.

    Repeats up to R times: run a fresh base for its round budget, then apply
    its output for m0 validation rounds; accept as soon as the empirical
    strategic loss is at most 4 epsilon.  If every candidate fails, fall back
    to class index 0.
    """

    name = "boost"
    conservative = False

    def __init__(self, base_factory, config: BoostConfig, base_name: str = "base"):
        self.base_factory = base_factory
        self.config = config
        self.name = f"boost:{base_name}"
        self._probe = base_factory()
        self.requires = self._probe.requires

    def reset(self, hclass, space, setting, rng):
        self.hclass = hclass
        self._args = (hclass, space, setting, rng)
        self._outer = 1
        self._phase = "base"
        self._base = self.base_factory()
        self._base.reset(*self._args)
        self._base_count = 0
        self._candidate = None
        self._val_count = 0
        self._val_errors = 0
        self._accepted = None

    @property
    def finished(self):
        return self._phase == "done"

    def choose(self, context):
        if self._phase == "base":
            return self._base.choose(context)
        if self._phase == "validate":
            return self._candidate
        return self._accepted

    def observe(self, feedback):
        cfg = self.config
        if self._phase == "base":
            self._base.observe(feedback)
            self._base_count += 1
            if self._base_count >= cfg.base_rounds:
                self._candidate = self._base.finalize()
                self._phase = "validate"
                self._val_count = 0
                self._val_errors = 0
            return
        if self._phase == "validate":
            self._val_count += 1
            if feedback.mistake:
                self._val_errors += 1
            if self._val_count >= cfg.validation_rounds:
                if self._val_errors <= 4.0 * cfg.epsilon * cfg.validation_rounds + 1e-12:
                    self._accepted = self._candidate
                    self._phase = "done"
                elif self._outer >= cfg.outer_rounds:
                    self._accepted = self.hclass.union((0,))
                    self._phase = "done"
                else:
                    self._outer += 1
                    self._base = self.base_factory()
                    self._base.reset(*self._args)
                    self._base_count = 0
                    self._phase = "base"

    def finalize(self):
        if self._accepted is not None:
            return self._accepted
        if self._candidate is not None:
            return self._candidate
        return self.hclass.union((0,))


# ---------------------------------------------------------------------------
# registry

def mistake_budget(name: str, n: int) -> int:
    """Worst-case distinct-predictor budget of a base learner on a class of size n."""
    if name == "halving":
        return math.ceil(math.log2(n)) + 1
    return n


def default_union_rounds(n: int, epsilon: float) -> int:
    """Round budget under which the random-union learner reaches expected loss epsilon."""
    return math.ceil(320.0 * math.log2(n) * math.log(n) / epsilon)


_BASES = {
    "halving": MedianHalvingLearner,
    "mwmr": RandomVersionSpaceLearner,
    "random-union": RandomUnionLearner,
    "seq-elim": SequentialElimination,
}


def learner_names() -> list:
    return sorted(_BASES) + ["survivor:<base>", "boost:<base>"]


def make_learner(name: str, n: int | None = None, epsilon: float | None = None,
                 delta: float | None = None, budget: int | None = None,
                 base_rounds: int | None = None) -> Learner:
    """Build a learner from its registry name.

    Wrapper names compose as "survivor:<base>" and "boost:<base>"; wrapper
    parameters (epsilon, delta, budget / base_rounds) fall back to the
    standard formulas, which need the class size n.
    """
    if name in _BASES:
        return _BASES[name]()
    if name.startswith("survivor:"):
        base_name = name.split(":", 1)[1]
        if base_name not in _BASES:
            raise KeyError(f"unknown base learner {base_name!r}")
        if epsilon is None or delta is None:
            raise ValueError("survivor wrapper needs epsilon and delta")
        if budget is None:
            if n is None:
                raise ValueError("survivor wrapper needs a budget or the class size")
            budget = mistake_budget(base_name, n)
        cfg = SurvivorConfig(budget=budget, epsilon=epsilon, delta=delta)
        return LongestSurvivor(_BASES[base_name](), cfg)
    if name.startswith("boost:"):
        base_name = name.split(":", 1)[1]
        if base_name not in _BASES:
            raise KeyError(f"unknown base learner {base_name!r}")
        if epsilon is None or delta is None:
            raise ValueError("boost wrapper needs epsilon and delta")
        if base_rounds is None:
            if n is None:
                raise ValueError("boost wrapper needs base_rounds or the class size")
            base_rounds = default_union_rounds(n, epsilon)
        cfg = BoostConfig(epsilon=epsilon, delta=delta, base_rounds=base_rounds)
        return BoostLearner(_BASES[base_name], cfg, base_name=base_name)
    raise KeyError(f"unknown learner {name!r}; known: {learner_names()}")
