"""Cross-module identities that the theory guarantees on every fixture."""

import numpy as np

from vak import _linalg as la
from vak.cones import ConeUnion, cone_union_equal, project_cone_union
from vak.geometry import ConvexPolyhedron
from vak.manifold import ManifoldChart
from vak.maps import (PolyMap, coderivative, graph_to_normal_pairs,
                      regular_coderivative)
from vak.projcode import projcode_polyhedral
from vak.sets import FiniteUnionSet


def fixtures():
    """(map, restriction set, point, value) corpus used by the checks."""
    corner = PolyMap(1, 1, FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[-1, 0], [-1, 1]], [0, 0], dim=2)]))
    halfline = FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[-1]], [0], dim=1)])
    line = ConvexPolyhedron.from_hrep(
        [], [], [[0, 0, 1, 0], [0, 1, 0, 1]], [0, 0], dim=4)
    plane = ConvexPolyhedron.from_hrep([], [], [[1, 0, 0, 0]], [0], dim=4)
    branches = PolyMap(2, 2, FiniteUnionSet.from_pieces([line, plane], dim=4))
    xline = FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([], [], [[0, 1]], [1], dim=2)])
    band = PolyMap(1, 1, FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[1, -1], [-1, 1]], [0, 1], dim=2)]))
    return [
        (corner, halfline, (0,), (0,)),
        (branches, xline, (0, 1), (0, 0)),
        (band, FiniteUnionSet.full_space(1), (0,), (0,)),
        (band, halfline, (0,), (0,)),
    ]


def test_inverse_at_zero_inclusion():
    # every ray of D*S|_X(xb|ub)^{-1}(0) belongs to D*_X S(xb|ub)^{-1}(0)
    for s, x_set, xb, ub in fixtures():
        dsx = coderivative(s.restrict(x_set), xb, ub)
        dxs = projcode_polyhedral(s, x_set, xb, ub).map
        inv_restricted = dsx.inverse_at_zero()
        inv_projected = dxs.inverse_at_zero()
        if inv_restricted.is_empty_union():
            continue
        for g in inv_restricted.generators():
            assert inv_projected.contains(g), (xb, ub, [float(v) for v in g])
        assert inv_projected.contains([0] * inv_projected.dim)


def test_projection_equals_intersection_on_affine_charts():
    # projected regular and limiting normal cones of the restricted graph
    # agree with the intersection against T_X(x) x R^m, exactly
    branches = fixtures()[1]
    s, x_set, xb, ub = branches
    chart = ManifoldChart.from_strings(2, ["(- x2 1)"], center=(0.0, 1.0),
                                       radius=10.0)
    t_sub = chart.tangent_space([float(v) for v in xb])
    n, m = s.n, s.m
    sx = s.restrict(x_set)
    for fn in (regular_coderivative, coderivative):
        d = fn(sx, xb, ub)
        npairs = graph_to_normal_pairs(d.graph, m, n)
        projected = project_cone_union(t_sub, npairs, trailing=m)
        cut = ConvexPolyhedron.from_hrep(
            [], [],
            [tuple(r) + (la.ZERO,) * m for r in t_sub.polar_cone().lineality],
            [la.ZERO] * len(t_sub.polar_cone().lineality), dim=n + m)
        intersected = npairs.intersect_piecewise(cut)
        eq, bad = cone_union_equal(projected, intersected)
        assert eq, (fn.__name__, bad)


def test_regular_coderivative_graph_inside_limiting():
    for s, x_set, xb, ub in fixtures():
        sx = s.restrict(x_set)
        reg = regular_coderivative(sx, xb, ub)
        lim = coderivative(sx, xb, ub)
        for g in reg.graph.generators():
            assert lim.graph.contains(g)


def test_projcode_graph_contains_projected_pointwise_cone():
    # the outer limit dominates the value computed at the point alone
    for s, x_set, xb, ub in fixtures():
        if not x_set.is_convex_representable():
            continue
        dxs = projcode_polyhedral(s, x_set, xb, ub)
        from vak.sets import tangent_cone_at

        t = tangent_cone_at(x_set, xb)
        if len(t.pieces) != 1:
            continue
        sx = s.restrict(x_set)
        d = coderivative(sx, xb, ub)
        npairs = graph_to_normal_pairs(d.graph, s.m, s.n)
        projected = project_cone_union(t.pieces[0], npairs, trailing=s.m)
        for g in projected.generators():
            assert dxs.limsup.contains(g), [float(v) for v in g]
