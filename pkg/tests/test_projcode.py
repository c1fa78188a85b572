"""Projectional coderivative routes and their cross-agreements."""

import numpy as np
import pytest

from vak import _linalg as la
from vak.cones import ConeUnion, cone_union_equal, sphere_hausdorff
from vak.errors import PointNotOnGraph, UnsupportedRestrictionSet
from vak.geometry import ConvexPolyhedron
from vak.manifold import ManifoldChart
from vak.maps import PolyMap, SmoothGraphMap, coderivative
from vak.projcode import (SampleBudget, projcode_manifold_fixed_point,
                          projcode_polyhedral, projcode_sampled,
                          projcode_smooth_single_valued,
                          sampled_chart_singlevalued)
from vak.sets import FiniteUnionSet


def two_branch_map():
    line = ConvexPolyhedron.from_hrep(
        [], [], [[0, 0, 1, 0], [0, 1, 0, 1]], [0, 0], dim=4)
    plane = ConvexPolyhedron.from_hrep([], [], [[1, 0, 0, 0]], [0], dim=4)
    return PolyMap(2, 2, FiniteUnionSet.from_pieces([line, plane], dim=4))


def line_x2_equals_1():
    return FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([], [], [[0, 1]], [1], dim=2)])


def halfline_set():
    return FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[-1]], [0], dim=1)])


def tanh_map():
    return SmoothGraphMap.from_strings(
        1, 1, ["(- u1 (tanh x1))", "(- 0 x1)"], center=(0.0, 0.0), radius=1.0)


def sigmoid_map():
    # 2 / (1 + exp(-x)) - 1, slope 1/2 at the origin
    return SmoothGraphMap.from_strings(
        1, 1, ["(- u1 (- (/ 2 (+ 1 (exp (- 0 x1)))) 1))", "(- 0 x1)"],
        center=(0.0, 0.0), radius=1.0)


# ---------------------------------------------------- exact polyhedral route


def test_interior_point_reduces_to_coderivative():
    s = PolyMap(1, 1, FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[-1, 1]], [0], dim=2)]))
    box = FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[1], [-1]], [2, 2], dim=1)])
    r = projcode_polyhedral(s, box, (0,), (0,))
    d = coderivative(s, (0,), (0,))
    eq, bad = cone_union_equal(r.map.graph, d.graph)
    assert eq, bad


def test_two_branch_fixture_exact_answer():
    # expected: u* = 0 maps to R x {0}, everything else to the empty set
    r = projcode_polyhedral(two_branch_map(), line_x2_equals_1(), (0, 1), (0, 0))
    expected = ConeUnion.from_pieces([
        ConvexPolyhedron.cone_from_generators(lineality=[(0, 0, 1, 0)], dim=4)])
    eq, bad = cone_union_equal(r.map.graph, expected)
    assert eq, bad
    v0 = r.map.value_at_zero()
    eq, _ = cone_union_equal(v0, ConeUnion.from_pieces([
        ConvexPolyhedron.cone_from_generators(lineality=[(1, 0)], dim=2)]))
    assert eq


def test_point_must_be_on_graph():
    with pytest.raises(PointNotOnGraph):
        projcode_polyhedral(two_branch_map(), line_x2_equals_1(), (1, 1), (5, 5))


def test_halfline_restriction_of_corner_graph():
    # gph S = {(x, u): x >= 0, u <= x}, X = R_+, reference (0, 0); the
    # limsup collects the curve normals, the corner cone projection and the
    # vertical-boundary collapse, exactly like the scalar running example
    s = PolyMap(1, 1, FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[-1, 0], [-1, 1]], [0, 0], dim=2)]))
    r = projcode_polyhedral(s, halfline_set(), (0,), (0,))
    expected = ConeUnion.from_pieces([
        ConvexPolyhedron.cone_from_generators([(-1, 1)], dim=2),
        ConvexPolyhedron.cone_from_generators([(0, 1)], dim=2),
    ])
    eq, bad = cone_union_equal(r.limsup, expected)
    assert eq, bad


# ------------------------------------------------------- fixed-point route


def test_fixed_point_matches_exact_on_fixture():
    chart = ManifoldChart.from_strings(2, ["(- x2 1)"], center=(0.0, 1.0),
                                       radius=10.0)
    s = two_branch_map()
    r_fp = projcode_manifold_fixed_point(s, chart, (0, 1), (0, 0))
    r_ex = projcode_polyhedral(s, line_x2_equals_1(), (0, 1), (0, 0))
    eq, bad = cone_union_equal(r_fp.map.graph, r_ex.map.graph)
    assert eq, bad
    assert r_fp.diagnostics["forms_equal"]


def test_fixed_point_needs_manifold_point():
    chart = ManifoldChart.from_strings(2, ["(- x2 1)"], center=(0.0, 1.0),
                                       radius=10.0)
    with pytest.raises(PointNotOnGraph):
        projcode_manifold_fixed_point(two_branch_map(), chart, (0, 0), (0, 0))


def test_fixed_point_random_affine_agreement():
    rng = np.random.default_rng(7)
    for trial in range(12):
        # random polyhedral graph through the origin in R^{2+1}
        rows = rng.integers(-2, 3, size=(3, 3))
        rows = [r for r in rows.tolist() if any(r)]
        s = PolyMap(2, 1, FiniteUnionSet.from_pieces(
            [ConvexPolyhedron.from_hrep(rows, [0] * len(rows), dim=3)]))
        # random affine line through the origin in R^2
        a, b = int(rng.integers(-2, 3)), int(rng.integers(1, 3))
        chart = ManifoldChart.from_strings(
            2, [f"(- (+ (* {a} x1) (* {b} x2)) 0)"], center=(0.0, 0.0),
            radius=10.0)
        x_set = chart.polyhedral_set()
        if not s.restrict(x_set).graph.contains((0, 0, 0)):
            continue
        r_fp = projcode_manifold_fixed_point(s, chart, (0, 0), (0,))
        r_ex = projcode_polyhedral(s, x_set, (0, 0), (0,))
        eq, bad = cone_union_equal(r_fp.map.graph, r_ex.map.graph)
        assert eq, (trial, bad)


# ------------------------------------------------ smooth single-valued route


def test_identity_map_on_affine_chart():
    chart = ManifoldChart.from_strings(2, ["(- x2 1)"], center=(0.0, 1.0),
                                       radius=10.0)
    out = projcode_smooth_single_valued(["x1", "x2"], chart, (0.0, 1.0), (1.0, 1.0))
    assert np.allclose(out, [1.0, 0.0])


def test_scalar_sum_on_circle():
    chart = ManifoldChart.from_strings(
        2, ["(- (+ (pow x1 2) (pow x2 2)) 1)"], center=(1.0, 0.0), radius=1.0)
    out = projcode_smooth_single_valued(["(+ x1 x2)"], chart, (1.0, 0.0), (1.0,))
    assert np.allclose(out, [0.0, 1.0], atol=1e-12)


def test_zero_input_gives_zero():
    chart = ManifoldChart.from_strings(
        2, ["(- (+ (pow x1 2) (pow x2 2)) 1)"], center=(1.0, 0.0), radius=1.0)
    out = projcode_smooth_single_valued(["(+ x1 x2)"], chart, (1.0, 0.0), (0.0,))
    assert np.allclose(out, [0.0, 0.0])


def test_sampled_chart_estimate_matches_formula():
    chart = ManifoldChart.from_strings(
        2, ["(- (+ (pow x1 2) (pow x2 2)) 1)"], center=(1.0, 0.0), radius=1.0)
    y = (1.0,)
    target = projcode_smooth_single_valued(["(+ x1 x2)"], chart, (1.0, 0.0), y)
    samples = sampled_chart_singlevalued(["(+ x1 x2)"], chart, (1.0, 0.0), y)
    assert len(samples) > 50
    dirs = {tuple(np.round(s / np.linalg.norm(s), 6)) for s in samples
            if np.linalg.norm(s) > 1e-12}
    sampled_rays = ConeUnion.from_pieces(
        [ConvexPolyhedron.cone_from_generators(
            [tuple(la.frac(float(v)) for v in d)], dim=2) for d in sorted(dirs)],
        dim=2)
    exact_ray = ConeUnion.from_rays([tuple(la.frac(float(v)) for v in target)],
                                    dim=2)
    assert sphere_hausdorff(sampled_rays, exact_ray, directions=500) <= 0.05


# ------------------------------------------------------------ sampled route


def test_sampled_polyhedral_agrees_with_exact():
    s = PolyMap(1, 1, FiniteUnionSet.from_pieces(
        [ConvexPolyhedron.from_hrep([[-1, 0], [-1, 1]], [0, 0], dim=2)]))
    r_ex = projcode_polyhedral(s, halfline_set(), (0,), (0,))
    r_sa = projcode_sampled(s, halfline_set(), (0,), (0,),
                            SampleBudget(per_radius=80, seed=3))
    assert sphere_hausdorff(r_ex.limsup, r_sa.limsup, directions=2000) <= 1e-3


def test_sampled_tanh_fixture_reproduces_expected_cones():
    budget = SampleBudget(r0=0.1, gamma=0.5, levels=5, per_radius=150, seed=0)
    r = projcode_sampled(tanh_map(), halfline_set(), (0.0,), (0.0,), budget)
    expected_normals = ConeUnion.from_pieces([
        ConvexPolyhedron.cone_from_generators([(-1, 1)], dim=2),
        ConvexPolyhedron.cone_from_generators([(0, 1)], dim=2),
    ])
    d = sphere_hausdorff(r.limsup, expected_normals, directions=4000)
    assert d <= 0.05, f"hausdorff {d}"
    # swapped presentation carries the drawing orientation of the fixture
    expected_drawn = ConeUnion.from_pieces([
        ConvexPolyhedron.cone_from_generators([(1, -1)], dim=2),
        ConvexPolyhedron.cone_from_generators([(1, 0)], dim=2),
    ])
    d2 = sphere_hausdorff(r.presentation(), expected_drawn, directions=4000)
    assert d2 <= 0.05


def test_sampled_sigmoid_fixture_slope_half():
    budget = SampleBudget(r0=0.1, gamma=0.5, levels=5, per_radius=150, seed=0)
    r = projcode_sampled(sigmoid_map(), halfline_set(), (0.0,), (0.0,), budget)
    expected_normals = ConeUnion.from_pieces([
        ConvexPolyhedron.cone_from_generators(
            [(la.frac(-0.5), la.frac(1.0))], dim=2),
        ConvexPolyhedron.cone_from_generators([(0, 1)], dim=2),
    ])
    assert sphere_hausdorff(r.limsup, expected_normals, directions=4000) <= 0.05


def test_sampled_sqrt_band_recovers_negative_ray():
    # S0(x) = [-sqrt(x), sqrt(x)] on x >= 0, graph {(x,u): u^2 <= x}
    band = SmoothGraphMap.from_strings(
        1, 1, ["(- (pow u1 2) x1)"], center=(0.0, 0.0), radius=1.0)
    r = projcode_sampled(band, halfline_set(), (0.0,), (0.0,),
                         SampleBudget(per_radius=150, seed=1))
    # a certified ray within tight angular tolerance of (p, q) = (-1, 0),
    # i.e. x* in R_- at u* = 0, must be present
    best = min(
        np.linalg.norm(np.array(g) - np.array([-1.0, 0.0]))
        for g in r.limsup.unit_generators_float())
    assert best <= 0.02, best
    assert not r.map.graph.contains((1.0, 0.0), 1e-6)  # no spurious u* rays


def test_sampled_rejects_nonconvex_restriction():
    nonconvex = FiniteUnionSet.from_pieces([
        ConvexPolyhedron.from_hrep([[-1]], [0], dim=1),
        ConvexPolyhedron.from_hrep([[1]], [-1], dim=1),
    ])
    with pytest.raises(UnsupportedRestrictionSet):
        projcode_sampled(tanh_map(), nonconvex, (0.0,), (0.0,))


def test_positive_homogeneity_of_outputs():
    r = projcode_polyhedral(two_branch_map(), line_x2_equals_1(), (0, 1), (0, 0))
    rng = np.random.default_rng(0)
    for g in r.map.graph.generators():
        gf = np.array(la.vec_float(g))
        for lam in rng.uniform(0.2, 9.0, size=4):
            assert r.map.graph.contains(tuple(map(float, lam * gf)), 1e-9)
