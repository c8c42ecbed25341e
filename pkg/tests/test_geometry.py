import math
import random

import numpy as np
import pytest

from stratgame.core.geometry import (
    MatrixSpace,
    ORIGIN,
    PermutationSphereSpace,
    PointNotInSpace,
    ScaledBasisSpace,
    StarSpace,
    basis,
    matrix_point,
    perm_point,
    scaled_basis,
    validate_metric,
)


def test_star_distances():
    s = StarSpace(5)
    assert s.dist(matrix_point(0), matrix_point(3)) == 1.0
    assert s.dist(matrix_point(2), matrix_point(4)) == 2.0
    assert s.dist(matrix_point(2), matrix_point(2)) == 0.0
    assert s.diameter() == 2.0


def test_star_metric_axioms_exhaustive():
    validate_metric(StarSpace(30))


def test_star_dist_row_matches_scalar():
    s = StarSpace(6)
    for x in s.points:
        row = s.dist_row(x, s.points)
        expect = [s.dist(x, p) for p in s.points]
        assert np.allclose(row, expect)


def test_scaled_basis_distances():
    p = ScaledBasisSpace(4)
    assert p.dist(ORIGIN, basis(1)) == pytest.approx(1.0)
    assert p.dist(ORIGIN, scaled_basis(1)) == pytest.approx(0.9)
    assert p.dist(scaled_basis(2), basis(2)) == pytest.approx(0.1)
    assert p.dist(scaled_basis(1), basis(2)) == pytest.approx(math.sqrt(1.81))
    assert p.dist(basis(0), basis(3)) == pytest.approx(math.sqrt(2))
    assert p.dist(scaled_basis(0), scaled_basis(3)) == pytest.approx(0.9 * math.sqrt(2))


def test_scaled_basis_metric_axioms_exhaustive():
    validate_metric(ScaledBasisSpace(12))


def _vector(space, p):
    # independent coordinate reconstruction straight from the identity
    v = np.zeros(space.n)
    if p[0] == "basis":
        v[p[1]] = 1.0
    elif p[0] == "perm":
        v = np.array(p[1], dtype=float) / space.z
    elif p[0] != "origin":
        raise AssertionError(p)
    return v


def test_sphere_distances_match_euclidean_oracle():
    rng = random.Random(7)
    for n in (3, 4, 6):
        space = PermutationSphereSpace(n, with_origin=True)
        pts = [ORIGIN] + [basis(i) for i in range(n)] + [
            space.sample_sphere_point(rng) for _ in range(8)]
        for _ in range(200):
            a, b = rng.choice(pts), rng.choice(pts)
            expect = np.linalg.norm(_vector(space, a) - _vector(space, b))
            assert space.dist(a, b) == pytest.approx(expect, abs=1e-12)


def test_sphere_point_norm_is_alpha():
    space = PermutationSphereSpace(4, alpha=0.1)
    for p in [perm_point(p) for p in [(0, 1, 2, 3), (3, 2, 1, 0), (2, 0, 3, 1)]]:
        assert np.linalg.norm(_vector(space, p)) == pytest.approx(0.1, abs=1e-12)


def test_sphere_scale_factor():
    space = PermutationSphereSpace(5, alpha=0.1)
    assert space.z == pytest.approx(math.sqrt(1 + 4 + 9 + 16) / 0.1)


def test_sphere_basis_distance_formula():
    # d(x, e_i) = sqrt(1 + alpha^2 - 2 x_i) with x_i the i-th coordinate
    space = PermutationSphereSpace(3, alpha=0.1)
    x = perm_point((0, 2, 1))
    assert space.dist(x, basis(0)) == pytest.approx(math.sqrt(1.01), abs=1e-12)
    assert space.dist(x, basis(1)) == pytest.approx(
        math.sqrt(1.01 - 4 / space.z), abs=1e-12)


def test_sphere_metric_axioms_sampled():
    validate_metric(PermutationSphereSpace(6, with_origin=True), random.Random(3))


def test_sphere_contains():
    space = PermutationSphereSpace(3)
    assert space.contains(perm_point((2, 0, 1)))
    assert not space.contains(perm_point((2, 0, 0)))
    assert not space.contains(ORIGIN)
    assert PermutationSphereSpace(3, with_origin=True).contains(ORIGIN)


def test_sphere_dist_row_fast_path():
    space = PermutationSphereSpace(5)
    x = perm_point((4, 0, 3, 1, 2))
    targets = [basis(i) for i in range(5)]
    row = space.dist_row(x, targets)
    assert np.allclose(row, [space.dist(x, t) for t in targets])


def test_matrix_space_from_metric_and_errors():
    pts = [matrix_point(i) for i in range(4)]
    m = MatrixSpace.from_metric(pts, lambda a, b: abs(a[1] - b[1]))
    assert m.dist(pts[0], pts[3]) == 3.0
    validate_metric(m)
    with pytest.raises(PointNotInSpace):
        m.dist(matrix_point(9), pts[0])
    with pytest.raises(ValueError):
        MatrixSpace(pts + [pts[0]], np.zeros((5, 5)))


def test_point_identity_order_is_total():
    pts = [matrix_point(3), matrix_point(1), ORIGIN, basis(2), basis(0),
           scaled_basis(1), perm_point((0, 1))]
    ordered = sorted(pts)
    assert ordered.index(matrix_point(1)) < ordered.index(matrix_point(3))
    assert ordered.index(basis(0)) < ordered.index(basis(2))
    assert len(set(pts)) == len(pts)
