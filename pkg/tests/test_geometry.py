"""Kernel tests: representation conversion, faces, polars, projection.

Derived expected values are produced by independent brute-force oracles
defined in this file (vertex enumeration over constraint subsets, grid
sampling, cvxpy reference projections), then asserted against the kernel.
"""

import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vak import _linalg as la
from vak.errors import DimensionMismatch, NotACone
from vak.geometry import ConvexPolyhedron

MEMB_TOL = 1e-9


# ---------------------------------------------------------------- oracles


def bruteforce_vertices(A, b, C=(), d=()):
    """All vertices of {Az<=b, Cz=d} by solving square subsystems."""
    A = [list(map(Fraction, r)) for r in A]
    b = [Fraction(x) for x in b]
    C = [list(map(Fraction, r)) for r in C]
    d = [Fraction(x) for x in d]
    n = len(A[0]) if A else len(C[0])
    rows = [(r, v) for r, v in zip(A, b)] + [(r, v) for r, v in zip(C, d)]
    verts = set()
    for subset in itertools.combinations(range(len(rows)), n):
        m = tuple(tuple(rows[i][0]) for i in subset)
        rhs = tuple(rows[i][1] for i in subset)
        if la.rank(m) < n:
            continue
        x = la.solve(m, rhs)
        if x is None:
            continue
        ok = all(la.dot(r, x) <= v for r, v in zip(A, b))
        ok = ok and all(la.dot(r, x) == v for r, v in zip(C, d))
        if ok:
            verts.add(tuple(x))
    return verts


def sample_points(poly, rng, count):
    """Random members via convex combinations of generators."""
    verts = [np.array(la.vec_float(v)) for v in poly.vertices]
    rays = [np.array(la.vec_float(r)) for r in poly.rays]
    lins = [np.array(la.vec_float(l)) for l in poly.lineality]
    pts = []
    for _ in range(count):
        w = rng.dirichlet(np.ones(len(verts))) if verts else None
        p = sum(wi * v for wi, v in zip(w, verts)) if verts else np.zeros(poly.dim)
        for r in rays:
            p = p + rng.exponential(0.7) * r
        for l in lins:
            p = p + rng.normal(0, 1.0) * l
        pts.append(p)
    return pts


# ---------------------------------------------------------------- dd_convert


def test_unit_square_roundtrip():
    sq = ConvexPolyhedron.from_hrep(
        [[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    assert set(sq.vertices) == {la.vec(v) for v in [(0, 0), (1, 0), (0, 1), (1, 1)]}
    assert sq.rays == () and sq.lineality == ()


def test_orthant_generators():
    orth = ConvexPolyhedron.from_hrep([[-1, 0], [0, -1]], [0, 0])
    assert set(orth.rays) == {la.vec((1, 0)), la.vec((0, 1))}
    assert orth.vertices == (la.vec((0, 0)),)


def test_triangle_vertices_match_bruteforce():
    A = [[1, 1], [1, -1], [-1, 0]]
    b = [1, 1, 0]
    expected = bruteforce_vertices(A, b)
    assert expected == {la.vec(v) for v in [(0, 1), (0, -1), (1, 0)]}
    p = ConvexPolyhedron.from_hrep(A, b)
    assert set(p.vertices) == expected
    assert p.rays == ()


def test_infeasible_hrep_gives_empty_marker():
    p = ConvexPolyhedron.from_hrep([[1], [-1]], [0, -1])
    assert p.is_empty
    assert not p.contains([0])


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionMismatch):
        ConvexPolyhedron.from_hrep([[1, 0], [1]], [0, 0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
                min_size=3, max_size=6))
def test_vrep_roundtrip_contains_original_points(pts):
    p = ConvexPolyhedron.from_vrep(pts)
    if p.is_empty:
        return
    for z in pts:
        assert p.contains(z)
    # round trip through H-rep reproduces the same set
    q = ConvexPolyhedron.from_hrep(p.A, p.b, p.C, p.d, dim=2)
    assert p.set_equal(q)


def test_roundtrip_random_hreps_against_bruteforce():
    rng = random.Random(7)
    for _ in range(30):
        n = rng.choice([2, 3])
        rows = rng.randrange(3, 7)
        A = [[rng.randrange(-2, 3) for _ in range(n)] for _ in range(rows)]
        b = [rng.randrange(0, 3) for _ in range(rows)]
        A.extend([[1 if j == i else 0 for j in range(n)] for i in range(n)])
        b.extend([3] * n)  # cap to keep bounded-ish
        p = ConvexPolyhedron.from_hrep(A, b)
        expected = bruteforce_vertices(A, b)
        if p.is_empty:
            assert not expected or all(
                any(la.dot(r, v) > rhs for r, rhs in zip(la.mat(A), la.vec(b)))
                for v in expected)
            continue
        assert set(p.vertices) <= expected
        # every bruteforce vertex is a member; extreme ones coincide
        for v in expected:
            assert p.contains(v)


# ---------------------------------------------------------------- intersect


def test_intersect_orthant_with_halfspace():
    orth = ConvexPolyhedron.from_hrep([[-1, 0], [0, -1]], [0, 0])
    half = ConvexPolyhedron.from_hrep([[1, 0]], [1])
    r = orth.intersect(half)
    expected = ConvexPolyhedron.from_hrep([[-1, 0], [0, -1], [1, 0]], [0, 0, 1])
    assert r.set_equal(expected)


def test_intersect_disjoint_boxes_empty():
    b1 = ConvexPolyhedron.from_hrep([[1], [-1]], [1, 0])
    b2 = ConvexPolyhedron.from_hrep([[1], [-1]], [5, -3])
    assert b1.intersect(b2).is_empty


def test_intersect_montecarlo_membership():
    rng = np.random.default_rng(0)
    p = ConvexPolyhedron.from_hrep(
        [[1, 1, 0], [-1, 0, 1], [0, -1, -1], [1, 0, 0], [-1, 0, 0],
         [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        [2, 1, 1, 2, 2, 2, 2, 2, 2])
    q = ConvexPolyhedron.from_hrep(
        [[1, -1, 1], [0, 1, 1], [1, 0, 0], [-1, 0, 0],
         [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        [1, 2, 2, 2, 2, 2, 2, 2])
    r = p.intersect(q)
    for z in rng.uniform(-2.2, 2.2, size=(10_000, 3)):
        inside = p.contains(z, MEMB_TOL) and q.contains(z, MEMB_TOL)
        assert r.contains(z, MEMB_TOL) == inside


# ---------------------------------------------------------------- polar


def test_polar_orthant():
    orth = ConvexPolyhedron.cone_from_generators([(1, 0), (0, 1)], dim=2)
    neg = ConvexPolyhedron.cone_from_generators([(-1, 0), (0, -1)], dim=2)
    assert orth.polar_cone().set_equal(neg)


def test_polar_subspace_is_orthogonal_complement():
    line = ConvexPolyhedron.cone_from_generators(lineality=[(1, 0, 0)], dim=3)
    plane = ConvexPolyhedron.cone_from_generators(
        lineality=[(0, 1, 0), (0, 0, 1)], dim=3)
    assert line.polar_cone().set_equal(plane)


def test_polar_of_2d_cone_matches_direction_grid_oracle():
    k = ConvexPolyhedron.cone_from_generators([(1, 0), (1, 1)], dim=2)
    pol = k.polar_cone()
    # oracle: dense direction grid, keep directions nonpositive on generators
    ok_dirs = []
    for ang in np.linspace(0, 2 * math.pi, 4000, endpoint=False):
        v = (math.cos(ang), math.sin(ang))
        if v[0] <= 1e-12 and v[0] + v[1] <= 1e-12:
            ok_dirs.append(v)
    for v in ok_dirs:
        assert pol.contains(v, 1e-9)
    # generators of the polar satisfy <v,z> <= 0 on a generator grid of k
    for v in pol.rays:
        for z in [(1, 0), (1, 1), (2, 1), (3, 1)]:
            assert la.dot(v, la.vec(z)) <= 0


def test_polar_involution():
    cones = [
        ConvexPolyhedron.cone_from_generators([(1, 0), (1, 1)], dim=2),
        ConvexPolyhedron.cone_from_generators([(1, 0, 0), (0, 1, 0), (0, 0, 1)], dim=3),
        ConvexPolyhedron.cone_from_generators([(1, 2)], lineality=[(0, 1)], dim=2),
        ConvexPolyhedron.from_hrep([[-1, 0], [0, -1]], [0, 0]),
    ]
    for k in cones:
        assert k.polar_cone().polar_cone().set_equal(k)


def test_polar_rejects_noncone():
    box = ConvexPolyhedron.from_hrep([[1], [-1]], [1, 0])
    with pytest.raises(NotACone):
        box.polar_cone()


# ---------------------------------------------------------------- affine image


def test_affine_image_identity():
    p = ConvexPolyhedron.from_hrep([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])
    q = p.affine_image([[1, 0], [0, 1]])
    assert p.set_equal(q)


def test_affine_image_cube_projection():
    cube = ConvexPolyhedron.from_hrep(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        [1, 0, 1, 0, 1, 0])
    sq = cube.affine_image([[1, 0, 0], [0, 1, 0]])
    expected = ConvexPolyhedron.from_hrep([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    assert sq.set_equal(expected)


def test_affine_image_montecarlo():
    rng = np.random.default_rng(3)
    p = ConvexPolyhedron.from_vrep([(0, 0), (2, 1), (1, 3), (-1, 1)])
    M = [[1, 2], [0, 1], [1, -1]]
    c = [0.5, -1, 0]
    img = p.affine_image(M, c)
    Mn, cn = np.array(M, float), np.array(c, float)
    for z in sample_points(p, rng, 2000):
        assert img.contains(Mn @ z + cn, 1e-7)


# ---------------------------------------------------------------- minkowski


def test_minkowski_zero_identity():
    p = ConvexPolyhedron.from_vrep([(1, 1), (2, 1), (1, 3)])
    zero = ConvexPolyhedron.point((0, 0))
    assert p.minkowski_sum(zero).set_equal(p)


def test_minkowski_segments():
    s = ConvexPolyhedron.from_hrep([[1], [-1]], [1, 0])
    total = s.minkowski_sum(s)
    expected = ConvexPolyhedron.from_hrep([[1], [-1]], [2, 0])
    assert total.set_equal(expected)


def test_minkowski_triangles_vs_sampled_hull():
    rng = np.random.default_rng(11)
    t1 = ConvexPolyhedron.from_vrep([(0, 0), (1, 0), (0, 1)])
    t2 = ConvexPolyhedron.from_vrep([(0, 0), (-1, 1), (1, 1)])
    s = t1.minkowski_sum(t2)
    pts1 = sample_points(t1, rng, 100)
    pts2 = sample_points(t2, rng, 100)
    worst = 0.0
    for a in pts1:
        for b in pts2:
            worst = max(worst, s.distance(a + b))
    assert worst <= 1e-6
    for v in s.vertices:
        va = np.array(la.vec_float(v))
        d = min(np.linalg.norm(va - (a + b)) for a in pts1 for b in pts2)
        assert d < 0.6  # sampled hull reaches near every vertex


# ---------------------------------------------------------------- faces


def test_unit_square_face_counts():
    sq = ConvexPolyhedron.from_hrep([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    fs = sq.faces()
    by_dim = {}
    for f in fs:
        by_dim.setdefault(f.affine_hull_dim, 0)
        by_dim[f.affine_hull_dim] += 1
    assert by_dim == {2: 1, 1: 4, 0: 4}


def test_orthant_faces():
    orth = ConvexPolyhedron.from_hrep([[-1, 0], [0, -1]], [0, 0])
    fs = orth.faces()
    dims = sorted(f.affine_hull_dim for f in fs)
    assert dims == [0, 1, 1, 2]


def bruteforce_face_count(poly):
    """Distinct nonempty faces via all active subsets (exponential oracle)."""
    seen = set()
    n_ineq = len(poly.A)
    for k in range(n_ineq + 1):
        for subset in itertools.combinations(range(n_ineq), k):
            sub = poly._face_polyhedron(frozenset(subset))
            if sub.is_empty:
                continue
            rip = sub.relative_interior_point()
            maximal = frozenset(i for i in range(n_ineq)
                                if la.dot(poly.A[i], rip) == poly.b[i])
            seen.add(maximal)
    return len(seen)


def test_cross_polytope_face_count():
    signs = list(itertools.product([1, -1], repeat=3))
    A = [list(s) for s in signs]
    b = [1] * 8
    cp = ConvexPolyhedron.from_hrep(A, b)
    fs = cp.faces()
    assert len(fs) == bruteforce_face_count(cp) == 27  # 26 proper + itself


def test_face_interior_points_have_strict_slack():
    sq = ConvexPolyhedron.from_hrep([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    for f in sq.faces():
        p = f.relative_interior_point
        for i, (row, rhs) in enumerate(zip(sq.A, sq.b)):
            val = la.dot(row, p)
            if i in f.active_inequality_indices:
                assert val == rhs
            else:
                assert float(rhs - val) > 1e-9


# ---------------------------------------------------------------- projection


def test_project_inside_is_identity():
    p = ConvexPolyhedron.from_vrep([(0, 0), (2, 0), (0, 2)])
    assert p.project_point((0.5, 0.5)) == la.vec((0.5, 0.5))


def test_project_onto_orthant():
    orth = ConvexPolyhedron.from_hrep([[-1, 0], [0, -1]], [0, 0])
    assert orth.project_point((-1, 1)) == la.vec((0, 1))


def test_projection_residual_in_normal_cone():
    p = ConvexPolyhedron.from_vrep([(0, 0), (1, 0), (0, 1)])
    z = la.vec((2, 2))
    y = p.project_point(z)
    resid = la.sub(z, y)
    # residual must be nonpositive on every feasible direction at y
    tangent = p.tangent_cone_at(y)
    for r in tangent.rays + tangent.lineality:
        assert la.dot(resid, r) <= 0
    for l in tangent.lineality:
        assert la.dot(resid, l) == 0


def test_projection_against_cvxpy_reference():
    cvxpy = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(5)
    for _ in range(25):
        pts = rng.uniform(-2, 2, size=(5, 3))
        poly = ConvexPolyhedron.from_vrep([tuple(map(float, p)) for p in pts])
        z = rng.uniform(-4, 4, size=3)
        mine = np.array(la.vec_float(poly.project_point(tuple(map(float, z)))))
        hf = poly.hrep_float()
        x = cvxpy.Variable(3)
        A = np.array(hf["A"])
        b = np.array(hf["b"])
        cons = [A @ x <= b] if len(b) else []
        for row, rhs in zip(hf["C"], hf["d"]):
            cons.append(np.array(row) @ x == rhs)
        prob = cvxpy.Problem(cvxpy.Minimize(cvxpy.sum_squares(x - z)), cons)
        prob.solve(solver=cvxpy.CLARABEL)
        assert np.linalg.norm(mine - x.value) <= 1e-6


def test_projection_idempotent():
    p = ConvexPolyhedron.from_vrep([(0, 0), (1, 0), (0, 1)])
    z = (3.0, -1.0)
    y1 = p.project_point(z)
    y2 = p.project_point(y1)
    assert y1 == y2


def test_distance_empty_is_inf():
    e = ConvexPolyhedron.empty(2)
    assert e.distance((0, 0)) == float("inf")


def test_scale_guards_raise():
    from vak.errors import ScaleExceeded

    with pytest.raises(ScaleExceeded):
        ConvexPolyhedron.from_hrep([[1] * 13], [0], dim=13)
    sq = ConvexPolyhedron.from_hrep([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    with pytest.raises(ScaleExceeded):
        sq.faces(budget=3)


def test_float_views_unitize_generators():
    orth = ConvexPolyhedron.cone_from_generators([(3, 4)], lineality=[(0, 5)], dim=2)
    vf = orth.vrep_float()
    for group in ("rays", "lineality"):
        for v in vf[group]:
            assert abs(np.linalg.norm(v) - 1.0) <= 1e-12


def test_distance_matches_grid_lower_bound():
    # the exact distance can never exceed any sampled member distance, and
    # on a dense grid the two agree tightly
    rng = np.random.default_rng(9)
    random_state = random.Random(13)
    for trial in range(1000):
        pts = [(random_state.randrange(-3, 4), random_state.randrange(-3, 4))
               for _ in range(4)]
        poly = ConvexPolyhedron.from_vrep(pts)
        if poly.is_empty:
            continue
        z = rng.uniform(-5, 5, size=2)
        d = poly.distance(tuple(map(float, z)))
        dense = trial % 25 == 0
        count = 4000 if dense else 60
        sampled = min(np.linalg.norm(np.array(s) - z)
                      for s in sample_points(poly, rng, count))
        assert d <= sampled + 1e-9
        if dense:
            # near-boundary optima sit on faces hit by dense Dirichlet draws
            assert sampled - d <= 0.3, (pts, tuple(z), d, sampled)
