"""Randomized stress of the conversion kernel against brute-force oracles."""

import itertools
import random
from fractions import Fraction

import numpy as np

from vak import _linalg as la
from vak.cones import ConeUnion
from vak.geometry import ConvexPolyhedron, union_contains
from vak.maps import PolyMap
from vak.projcode import SampleBudget, projcode_polyhedral, projcode_sampled
from vak.sets import FiniteUnionSet


def bruteforce_extreme_rays(rows, n):
    """Extreme rays of {x : rows x <= 0} via rank n-1 active subsets.

    Exhaustive and exact; only usable for tiny instances.
    """
    rows = [la.vec(r) for r in rows]
    rays = set()
    for k in range(n):
        for subset in itertools.combinations(range(len(rows)), k):
            sub = tuple(rows[i] for i in subset)
            null = la.nullspace(sub, n) if sub else la.identity(n)
            if len(null) != 1:
                continue
            for cand in (null[0], la.neg(null[0])):
                if all(la.dot(r, cand) <= 0 for r in rows):
                    rays.add(la.primitive(cand))
    return rays


def test_dd_generators_reproduce_bruteforce_cone_membership():
    rng = random.Random(71)
    for trial in range(120):
        n = rng.choice([2, 3, 4])
        k = rng.randrange(1, 6)
        rows = [[rng.randrange(-2, 3) for _ in range(n)] for _ in range(k)]
        rows = [r for r in rows if any(r)]
        if not rows:
            continue
        cone = ConvexPolyhedron.from_hrep(rows, [0] * len(rows), dim=n)
        brute = bruteforce_extreme_rays(rows, n)
        # every kernel generator is feasible; every brute ray is a member
        for r in cone.rays:
            assert all(la.dot(la.vec(row), r) <= 0 for row in la.mat(rows))
        for l in cone.lineality:
            for s in (l, la.neg(l)):
                assert all(la.dot(la.vec(row), s) <= 0 for row in la.mat(rows))
        for r in brute:
            assert cone.recession_contains(r), (trial, rows, r)
        # minimality: no kernel ray is a conic combination of the others
        gens = list(cone.rays)
        for i, r in enumerate(gens):
            others = gens[:i] + gens[i + 1:]
            reduced = ConvexPolyhedron.cone_from_generators(
                others, cone.lineality, dim=n)
            assert not reduced.recession_contains(r), (trial, rows, r)


def test_roundtrip_stability_under_double_conversion():
    rng = random.Random(5)
    for _ in range(60):
        n = rng.choice([2, 3])
        pts = [tuple(rng.randrange(-4, 5) for _ in range(n)) for _ in range(5)]
        rays = [tuple(rng.randrange(-2, 3) for _ in range(n)) for _ in range(2)]
        rays = [r for r in rays if any(r)]
        p = ConvexPolyhedron.from_vrep(pts, rays)
        q = ConvexPolyhedron.from_hrep(p.A, p.b, p.C, p.d, dim=n)
        assert p.set_equal(q)
        # canonical forms are identical, not merely equal as sets
        assert p.A == q.A and p.b == q.b and p.C == q.C and p.d == q.d
        assert p.vertices == q.vertices and p.rays == q.rays
        assert p.lineality == q.lineality


def test_union_contains_against_montecarlo():
    rng_np = np.random.default_rng(17)
    rng = random.Random(23)
    for trial in range(40):
        n = 2
        def rand_piece():
            rows = [[rng.randrange(-2, 3) for _ in range(n)]
                    for _ in range(rng.randrange(1, 4))]
            rows = [r for r in rows if any(r)]
            if not rows:
                return ConvexPolyhedron.full_space(n)
            return ConvexPolyhedron.from_hrep(rows, [0] * len(rows), dim=n)
        cover = [rand_piece() for _ in range(rng.randrange(1, 3))]
        target = [rand_piece()]
        ok, witness = union_contains(cover, target)
        if ok:
            # no sampled target point may escape the cover
            for piece in target:
                gens = [np.array(la.vec_float(g)) for g in
                        piece.rays + piece.lineality
                        + tuple(la.neg(l) for l in piece.lineality)]
                if not gens:
                    continue
                for _ in range(300):
                    lam = rng_np.exponential(1.0, size=len(gens))
                    z = sum(l * g for l, g in zip(lam, gens))
                    zt = tuple(map(float, z))
                    assert any(q.contains(zt, 1e-9) for q in cover), (trial, zt)
        else:
            w = tuple(float(v) for v in witness)
            assert any(p.contains(w, 1e-9) for p in target)
            assert not any(q.contains(w, 1e-9) for q in cover)


def test_desk_scale_dimensions():
    # 5-cube: 3^5 faces; 4-dim cross-polytope; random 4-dim H-reps against
    # the brute-force vertex oracle from the geometry tests
    from test_geometry import bruteforce_vertices

    n = 5
    rows, rhs = [], []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        rows.append(list(e))
        rhs.append(1)
        rows.append([-v for v in e])
        rhs.append(0)
    cube = ConvexPolyhedron.from_hrep(rows, rhs)
    assert len(cube.vertices) == 2 ** n
    assert len(cube.faces()) == 3 ** n

    signs = list(itertools.product([1, -1], repeat=4))
    cross = ConvexPolyhedron.from_hrep([list(s) for s in signs], [1] * 16)
    assert len(cross.vertices) == 8

    rng = random.Random(3)
    for _ in range(10):
        rws = [[rng.randrange(-2, 3) for _ in range(4)] for _ in range(6)]
        rws += [[1 if j == i else 0 for j in range(4)] for i in range(4)]
        rh = [rng.randrange(0, 3) for _ in range(6)] + [3] * 4
        p = ConvexPolyhedron.from_hrep(rws, rh)
        expected = bruteforce_vertices(rws, rh)
        if p.is_empty:
            continue
        assert set(p.vertices) <= expected
        for v in expected:
            assert p.contains(v)


def test_dual_route_agreement_random_polyhedral_instances():
    rng = np.random.default_rng(31)
    done = 0
    while done < 6:
        rows = rng.integers(-2, 3, size=(int(rng.integers(1, 4)), 2))
        rows = [r.tolist() for r in rows if np.any(r)]
        if not rows:
            continue
        s = PolyMap(1, 1, FiniteUnionSet.from_pieces(
            [ConvexPolyhedron.from_hrep(rows, [0] * len(rows), dim=2)]))
        x_set = FiniteUnionSet.from_pieces(
            [ConvexPolyhedron.from_hrep([[-1]], [0], dim=1)])
        if not s.restrict(x_set).graph.contains((0, 0)):
            continue
        exact = projcode_polyhedral(s, x_set, (0,), (0,))
        sampled = projcode_sampled(s, x_set, (0,), (0,),
                                   SampleBudget(per_radius=60,
                                                seed=int(rng.integers(0, 999))))
        from vak.cones import sphere_hausdorff

        if exact.limsup.is_zero() or sampled.limsup.is_zero():
            eqz = exact.limsup.is_zero() and sampled.limsup.is_zero()
            assert eqz
        else:
            assert sphere_hausdorff(exact.limsup, sampled.limsup,
                                    directions=1500) <= 1e-3
        done += 1
