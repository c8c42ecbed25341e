"""Hypotheses, hypothesis classes and unions of class members.

A hypothesis is identified with its positive region, stored as an explicit
frozenset of points.  Every construction in this library only ever needs
small positive regions (singletons or small unions), including on spaces
whose full universe is never materialized.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .geometry import MetricSpace, Point


class Hypothesis:
    """A binary classifier given by its positive region (may be empty)."""

    __slots__ = ("positive",)

    def __init__(self, positive: Iterable[Point]):
        self.positive = frozenset(positive)

    def label(self, x: Point) -> int:
        return 1 if x in self.positive else -1

    def __eq__(self, other):
        return isinstance(other, Hypothesis) and self.positive == other.positive

    def __hash__(self):
        return hash(self.positive)

    def __repr__(self):
        return f"Hypothesis({sorted(self.positive)!r})"


ALL_NEGATIVE = Hypothesis(())


class HypothesisClass:
    """An ordered tuple of distinct hypotheses; learners refer to members by index."""

    def __init__(self, members: Sequence[Hypothesis]):
        members = tuple(members)
        seen = set()
        for h in members:
            if h.positive in seen:
                raise ValueError("hypothesis class members must have distinct positive sets")
            seen.add(h.positive)
        self.members = members

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i: int) -> Hypothesis:
        return self.members[i]

    def union(self, indices: Iterable[int]) -> "UnionPredictor":
        return UnionPredictor(self, tuple(indices))


def singleton_class(points: Sequence[Point]) -> HypothesisClass:
    return HypothesisClass([Hypothesis((p,)) for p in points])


class UnionPredictor:
    """Union of class members: predicts +1 where any part does.

    ``parts`` are indices into the hypothesis class; duplicates are allowed
    (random constructions sample with replacement).
    """

    __slots__ = ("hclass", "parts")

    def __init__(self, hclass: HypothesisClass, parts: tuple):
        if not parts:
            raise ValueError("a union predictor needs at least one part")
        self.hclass = hclass
        self.parts = parts

    def label(self, x: Point) -> int:
        members = self.hclass.members
        for i in self.parts:
            if x in members[i].positive:
                return 1
        return -1

    def positive_points(self) -> list:
        members = self.hclass.members
        seen = set()
        for i in self.parts:
            seen.update(members[i].positive)
        return list(seen)

    def key(self) -> tuple:
        """Sorted distinct part indices; identity of the predicted function."""
        return tuple(sorted(set(self.parts)))

    def __repr__(self):
        return f"UnionPredictor(parts={self.parts!r})"


Predictor = Hypothesis | UnionPredictor


def positive_points(f: Predictor) -> list:
    if isinstance(f, Hypothesis):
        return list(f.positive)
    return f.positive_points()


def predict(f: Predictor, x: Point, space: MetricSpace | None = None) -> int:
    """Evaluate the predictor at a point; +1 iff x lies in the positive region."""
    if space is not None:
        space.check_point(x)
    return f.label(x)


def distance_to_hypothesis(space: MetricSpace, x: Point, f: Predictor) -> float:
    """min distance from x to the positive region; +inf when the region is empty.

    For unions this equals the minimum of the per-part distances.
    """
    space.check_point(x)
    pts = positive_points(f)
    if not pts:
        return math.inf
    dist = space.dist
    return min(dist(x, p) for p in pts)


class ClassDistanceIndex:
    """Vectorized point-to-member distances for one (space, class) pair.

    ``row(x)`` returns d(x, h) for every class member as a numpy array and
    ``order(x)`` the member indices sorted by (distance, index).  Rows are
    cached per point on enumerable spaces, where the same features recur.
    """

    def __init__(self, space: MetricSpace, hclass: HypothesisClass):
        self.space = space
        self.hclass = hclass
        self._single_targets = None
        if all(len(h.positive) == 1 for h in hclass.members):
            self._single_targets = [next(iter(h.positive)) for h in hclass.members]
        self._cache_rows: dict = {}
        self._cache_orders: dict = {}
        self._cache = space.enumerable

    def _compute_row(self, x: Point) -> np.ndarray:
        if self._single_targets is not None:
            return self.space.dist_row(x, self._single_targets)
        return np.array(
            [distance_to_hypothesis(self.space, x, h) for h in self.hclass.members]
        )

    def row(self, x: Point) -> np.ndarray:
        if self._cache:
            r = self._cache_rows.get(x)
            if r is None:
                r = self._compute_row(x)
                self._cache_rows[x] = r
            return r
        return self._compute_row(x)

    def order(self, x: Point) -> np.ndarray:
        if self._cache:
            o = self._cache_orders.get(x)
            if o is None:
                o = np.argsort(self.row(x), kind="stable")
                self._cache_orders[x] = o
            return o
        return np.argsort(self.row(x), kind="stable")


def union_distance(space: MetricSpace, x: Point, f: Predictor, g: Predictor) -> float:
    """Distance to the union of two predictors (helper for identity checks)."""
    return min(distance_to_hypothesis(space, x, f), distance_to_hypothesis(space, x, g))
