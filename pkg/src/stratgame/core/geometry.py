"""Finite metric spaces and their point identities.

Points are small tagged tuples so they stay hashable, cheap to compare and
cheap to serialize:

    ("idx", k)       -- k-th point of a matrix-backed space (star spaces use
                        index 0 for the hub and 1..n for the spokes)
    ("origin",)      -- the all-zeros vector
    ("basis", i)     -- standard basis vector e_i, 0-based
    ("sbasis", i)    -- a basis vector shrunk by a fixed factor (0.9 e_i)
    ("perm", p)      -- a point of the permutation sphere; p is a tuple
                        permutation of (0, 1, ..., n-1) and coordinate j of
                        the point equals p[j] / z

The natural tuple ordering doubles as the deterministic "lowest identity
first" tie-break order used across the library.
"""

from __future__ import annotations

import itertools
import math
import random
from typing import Iterable, Sequence

import numpy as np

Point = tuple

# Absolute tolerance for every distance comparison in the library.  All
# constructed spaces keep genuinely distinct distances separated by far more
# than this.
TOL = 1e-9

# Metric validation: exhaustive triple check up to this many points, sampled
# triples beyond.
EXHAUSTIVE_LIMIT = 200
SAMPLED_TRIPLES = 100_000


class PointNotInSpace(ValueError):
    """A point identity was used with a space that does not contain it."""


def matrix_point(k: int) -> Point:
    return ("idx", k)


ORIGIN: Point = ("origin",)


def basis(i: int) -> Point:
    return ("basis", i)


def scaled_basis(i: int) -> Point:
    return ("sbasis", i)


def perm_point(values: Sequence[int]) -> Point:
    return ("perm", tuple(values))


class MetricSpace:
    """A point universe with a distance oracle.

    Concrete spaces either enumerate their points (``points`` is a list and
    ``enumerable`` is True) or compute distances from point identities alone
    (permutation spheres, whose universe of n! points is never materialized).
    """

    enumerable: bool = False
    points: list | None = None

    def contains(self, p: Point) -> bool:
        raise NotImplementedError

    def dist(self, a: Point, b: Point) -> float:
        """Distance between two point identities.

        Identities are trusted on this hot path; callers that accept outside
        input validate with ``check_point`` first.
        """
        raise NotImplementedError

    def check_point(self, p: Point) -> None:
        if not self.contains(p):
            raise PointNotInSpace(f"point not in space: {p!r}")

    def dist_row(self, x: Point, targets: Sequence[Point]) -> np.ndarray:
        """Distances from ``x`` to each target, as a float array."""
        d = self.dist
        return np.array([d(x, t) for t in targets])

    def sample_point(self, rng: random.Random) -> Point:
        if self.points is None:
            raise NotImplementedError
        return self.points[rng.randrange(len(self.points))]

    def diameter(self) -> float:
        raise NotImplementedError


class MatrixSpace(MetricSpace):
    """Explicit space backed by a symmetric distance matrix."""

    enumerable = True

    def __init__(self, points: Sequence[Point], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (len(points), len(points)):
            raise ValueError("distance matrix shape does not match point count")
        self.points = list(points)
        self.matrix = matrix
        self._index = {p: k for k, p in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise ValueError("duplicate point identities")

    @classmethod
    def from_metric(cls, points: Sequence[Point], fn) -> "MatrixSpace":
        n = len(points)
        m = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                m[i, j] = m[j, i] = fn(points[i], points[j])
        return cls(points, m)

    def contains(self, p: Point) -> bool:
        return p in self._index

    def index_of(self, p: Point) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise PointNotInSpace(f"point not in space: {p!r}") from None

    def dist(self, a: Point, b: Point) -> float:
        return self.matrix[self.index_of(a), self.index_of(b)]

    def dist_row(self, x: Point, targets: Sequence[Point]) -> np.ndarray:
        row = self.matrix[self.index_of(x)]
        idx = [self._index[t] for t in targets]
        return row[idx]

    def diameter(self) -> float:
        return float(self.matrix.max())


class StarSpace(MetricSpace):
    """Hub-and-spokes space: points 0..n with d(0,i)=1 and d(i,j)=2.

    Point 0 is the hub; 1..n are the spokes.  This is the carrier space both
    for the spoke-singleton online constructions and for the explicit
    manipulation-set family (which ignores the metric).
    """

    enumerable = True

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("star space needs at least one spoke")
        self.n = n
        self.points = [matrix_point(k) for k in range(n + 1)]

    def contains(self, p: Point) -> bool:
        return p[0] == "idx" and 0 <= p[1] <= self.n

    def dist(self, a: Point, b: Point) -> float:
        i, j = a[1], b[1]
        if i == j:
            return 0.0
        if i == 0 or j == 0:
            return 1.0
        return 2.0

    def dist_row(self, x: Point, targets: Sequence[Point]) -> np.ndarray:
        i = x[1]
        idx = np.fromiter((t[1] for t in targets), dtype=np.int64, count=len(targets))
        if i == 0:
            return np.where(idx == 0, 0.0, 1.0)
        return np.where(idx == i, 0.0, np.where(idx == 0, 1.0, 2.0))

    def diameter(self) -> float:
        return 2.0 if self.n >= 2 else 1.0


class ScaledBasisSpace(MetricSpace):
    """Euclidean space on {0, e_1..e_n, 0.9 e_1..0.9 e_n}.

    Distances follow from the vector identities, e.g. d(0.9 e_i, e_i) = 0.1
    and d(0.9 e_i, e_j) = sqrt(0.81 + 1) for j != i.
    """

    enumerable = True

    def __init__(self, n: int, factor: float = 0.9):
        if n < 1:
            raise ValueError("need at least one basis direction")
        self.n = n
        self.factor = factor
        self.points = [ORIGIN] + [basis(i) for i in range(n)] + [
            scaled_basis(i) for i in range(n)
        ]
        self._pointset = set(self.points)

    def contains(self, p: Point) -> bool:
        return p in self._pointset

    def _vec_norm2(self, p: Point) -> float:
        # squared norm of the underlying vector
        if p[0] == "origin":
            return 0.0
        if p[0] == "basis":
            return 1.0
        return self.factor * self.factor

    def dist(self, a: Point, b: Point) -> float:
        if a == b:
            return 0.0
        # inner product is nonzero only when both points sit on the same axis
        dot = 0.0
        if a[0] != "origin" and b[0] != "origin" and a[1] == b[1]:
            fa = 1.0 if a[0] == "basis" else self.factor
            fb = 1.0 if b[0] == "basis" else self.factor
            dot = fa * fb
        return math.sqrt(self._vec_norm2(a) + self._vec_norm2(b) - 2.0 * dot)

    def diameter(self) -> float:
        return math.sqrt(2.0)


class PermutationSphereSpace(MetricSpace):
    """Basis vectors plus the sphere of scaled coordinate permutations.

    The sphere consists of all points whose coordinates permute
    {0, 1/z, ..., (n-1)/z} with z = sqrt(sum_{k<n} k^2) / alpha, so every
    sphere point has norm alpha.  The n! sphere points are never listed;
    distances come from the closed forms

        d(p, e_i)   = sqrt(1 + alpha^2 - 2 p_i / z)
        d(p, q)     = ||p - q||_2   (computed from the integer tuples)
        d(p, 0)     = alpha
        d(e_i, e_j) = sqrt(2)
    """

    enumerable = False

    def __init__(self, n: int, alpha: float = 0.1, with_origin: bool = False):
        if n < 2:
            raise ValueError("permutation sphere needs n >= 2")
        self.n = n
        self.alpha = alpha
        self.with_origin = with_origin
        self.coord_sq_sum = sum(k * k for k in range(n))  # sum of 0^2..(n-1)^2
        self.z = math.sqrt(self.coord_sq_sum) / alpha
        self._value_set = frozenset(range(n))

    def contains(self, p: Point) -> bool:
        tag = p[0]
        if tag == "origin":
            return self.with_origin
        if tag == "basis":
            return 0 <= p[1] < self.n
        if tag == "perm":
            vals = p[1]
            return len(vals) == self.n and set(vals) == self._value_set
        return False

    def coords(self, p: Point) -> np.ndarray:
        """Materialize the underlying vector (for validation, not hot paths)."""
        self.check_point(p)
        v = np.zeros(self.n)
        if p[0] == "basis":
            v[p[1]] = 1.0
        elif p[0] == "perm":
            v[:] = np.asarray(p[1], dtype=float) / self.z
        return v

    def dist(self, a: Point, b: Point) -> float:
        if a == b:
            return 0.0
        ta, tb = a[0], b[0]
        if ta > tb:
            a, b, ta, tb = b, a, tb, ta
        # tag pairs in sorted order: basis<origin<perm
        if ta == "basis" and tb == "basis":
            return math.sqrt(2.0)
        if ta == "basis" and tb == "origin":
            return 1.0
        if ta == "basis" and tb == "perm":
            return math.sqrt(1.0 + self.alpha ** 2 - 2.0 * b[1][a[1]] / self.z)
        if ta == "origin" and tb == "perm":
            return self.alpha
        # perm-perm
        pa, pb = a[1], b[1]
        s = sum((u - v) * (u - v) for u, v in zip(pa, pb))
        return math.sqrt(s) / self.z

    def dist_row(self, x: Point, targets: Sequence[Point]) -> np.ndarray:
        if x[0] == "perm" and all(t[0] == "basis" for t in targets):
            vals = np.fromiter(
                (x[1][t[1]] for t in targets), dtype=float, count=len(targets)
            )
            return np.sqrt(1.0 + self.alpha ** 2 - 2.0 * vals / self.z)
        return super().dist_row(x, targets)

    def sample_sphere_point(self, rng: random.Random) -> Point:
        vals = list(range(self.n))
        rng.shuffle(vals)
        return ("perm", tuple(vals))

    def sample_point(self, rng: random.Random) -> Point:
        # basis points, the optional origin and a random sphere point are all
        # fair game; weight the sphere like one extra "bucket"
        k = rng.randrange(self.n + 1 + (1 if self.with_origin else 0))
        if k < self.n:
            return basis(k)
        if self.with_origin and k == self.n:
            return ORIGIN
        return self.sample_sphere_point(rng)

    def diameter(self) -> float:
        return math.sqrt(2.0)


def iter_permutations(n: int) -> Iterable[tuple]:
    return itertools.permutations(range(n))


def validate_metric(space: MetricSpace, rng: random.Random | None = None,
                    tol: float = TOL) -> None:
    """Check the metric axioms, raising AssertionError on violation.

    Exhaustive over all triples for enumerable spaces up to 200 points;
    otherwise 1e5 sampled triples.
    """
    if space.enumerable and space.points is not None and len(space.points) <= EXHAUSTIVE_LIMIT:
        pts = space.points
        n = len(pts)
        m = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                m[i, j] = space.dist(pts[i], pts[j])
        assert np.all(np.abs(np.diag(m)) <= tol), "d(a,a) != 0"
        assert np.all(np.abs(m - m.T) <= tol), "asymmetric distance"
        assert np.all(m >= -tol), "negative distance"
        # triangle inequality over all triples at once
        tri = m[:, :, None] + m[None, :, :]  # d(a,b) + d(b,c)
        assert np.all(m[:, None, :] <= tri + tol), "triangle inequality violated"
        return
    rng = rng or random.Random(0)
    for _ in range(SAMPLED_TRIPLES):
        a = space.sample_point(rng)
        b = space.sample_point(rng)
        c = space.sample_point(rng)
        dab, dba = space.dist(a, b), space.dist(b, a)
        assert space.dist(a, a) <= tol
        assert abs(dab - dba) <= tol
        assert dab >= -tol
        assert space.dist(a, c) <= dab + space.dist(b, c) + tol
