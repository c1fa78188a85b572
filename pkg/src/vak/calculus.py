"""Chain and sum rules: constraint qualifications, right-hand sides,
inclusion certificates, and equality certification on convex instances.

Unions over continuum intermediate sets (the w in S1|_X(x) n S2^{-1}(u), or
the decompositions u_1 + ... + u_p = u) are evaluated at relative-interior
representatives of the faces of those polyhedral sets; coderivatives of
polyhedral data are constant on those faces, which makes the discretization
exact.  Outer limits in the sum-rule right-hand sides run over the strata
of the local complex, with representatives placed inside the localization
radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import _linalg as la
from .cones import ConeUnion, project_cone_union
from .errors import (DimensionMismatch, UnboundedDecomposition,
                     UnboundedIntermediate, UnsupportedRestrictionSet)
from .geometry import ConvexPolyhedron, union_contains
from .manifold import ManifoldChart
from .maps import (PolyMap, PosHomMap, coderivative, compose_graphs,
                   sum_map)
from .projcode import projcode_polyhedral
from .sets import (FiniteUnionSet, limiting_normal_cone_at, local_cone_model,
                   localization_radius, strata_representatives,
                   tangent_cone_at)

ZERO = la.ZERO


@dataclass
class RuleReport:
    cq_holds: bool
    rhs: PosHomMap | None
    lhs: PosHomMap | None = None
    inclusion_holds: bool | None = None
    equality_holds: bool | None = None
    cq_witnesses: list = field(default_factory=list)
    violating_rays: list = field(default_factory=list)
    intermediate_points: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cq_holds": self.cq_holds,
            "rhs": self.rhs.to_json() if self.rhs else None,
            "lhs": self.lhs.to_json() if self.lhs else None,
            "inclusion_holds": self.inclusion_holds,
            "equality_holds": self.equality_holds,
            "cq_witnesses": self.cq_witnesses,
            "violating_rays": self.violating_rays,
            "intermediate_points": self.intermediate_points,
            "warnings": list(self.warnings),
            "diagnostics": self.diagnostics,
        }


# ------------------------------------------------------------- cone helpers


def compose_cone_graphs(inner: ConeUnion, outer: ConeUnion,
                        a_dim: int, w_dim: int, c_dim: int) -> ConeUnion:
    """{(a, c) : exists w with (a, w) in inner, (w, c) in outer}."""
    total = a_dim + w_dim + c_dim
    parts = []
    for gi in inner.pieces:
        lift_i = ConvexPolyhedron.from_hrep(
            [tuple(r) + (ZERO,) * c_dim for r in gi.A], gi.b,
            [tuple(r) + (ZERO,) * c_dim for r in gi.C], gi.d, dim=total)
        for go in outer.pieces:
            lift_o = ConvexPolyhedron.from_hrep(
                [(ZERO,) * a_dim + tuple(r) for r in go.A], go.b,
                [(ZERO,) * a_dim + tuple(r) for r in go.C], go.d, dim=total)
            tri = lift_i.intersect(lift_o)
            if tri.is_empty:
                continue
            sel = [[la.ONE if j == i else ZERO for j in range(total)]
                   for i in range(a_dim)]
            sel += [[la.ONE if j == a_dim + w_dim + i else ZERO for j in range(total)]
                    for i in range(c_dim)]
            parts.append(tri.affine_image(sel))
    if not parts:
        return ConeUnion.empty(a_dim + c_dim)
    return ConeUnion.from_pieces(parts, dim=a_dim + c_dim)


def compose_pos_hom(inner: PosHomMap, outer: PosHomMap) -> PosHomMap:
    """outer o inner as positively homogeneous maps."""
    if inner.output_dim != outer.input_dim:
        raise DimensionMismatch("composition middle dimensions differ")
    g = compose_cone_graphs(inner.graph, outer.graph,
                            inner.input_dim, inner.output_dim, outer.output_dim)
    return PosHomMap(inner.input_dim, outer.output_dim, g)


def same_input_sum(graphs: list[ConeUnion], in_dim: int, out_dim: int) -> ConeUnion:
    """{(y, v_1 + ... + v_p) : (y, v_i) in G_i for every i}."""
    p = len(graphs)
    total = in_dim + p * out_dim
    lifted = []
    for i, g in enumerate(graphs):
        def lift_row(row, i=i):
            return (tuple(row[:in_dim]) + (ZERO,) * (i * out_dim)
                    + tuple(row[in_dim:]) + (ZERO,) * ((p - 1 - i) * out_dim))
        parts = []
        for piece in g.pieces:
            parts.append(ConvexPolyhedron.from_hrep(
                [lift_row(r) for r in piece.A], piece.b,
                [lift_row(r) for r in piece.C], piece.d, dim=total))
        lifted.append(parts)
    acc = lifted[0]
    for parts in lifted[1:]:
        acc = [a.intersect(b) for a in acc for b in parts]
        acc = [x for x in acc if not x.is_empty]
    sel = [[la.ONE if j == i else ZERO for j in range(total)] for i in range(in_dim)]
    for i in range(out_dim):
        row = [ZERO] * total
        for k in range(p):
            row[in_dim + k * out_dim + i] = la.ONE
        sel.append(row)
    imgs = [piece.affine_image(sel) for piece in acc]
    if not imgs:
        return ConeUnion.empty(in_dim + out_dim)
    return ConeUnion.from_pieces(imgs, dim=in_dim + out_dim)


def _union_face_representatives(fset: FiniteUnionSet) -> list[la.Vec]:
    reps = []
    seen = set()
    for piece in fset.pieces:
        for face in piece.faces():
            pt = face.relative_interior_point
            if pt not in seen:
                seen.add(pt)
                reps.append(pt)
    return reps


def _is_zero_or_empty(k: ConeUnion) -> bool:
    return k.is_empty_union() or k.is_zero()


def _intersect_unions(a: ConeUnion, b: ConeUnion) -> ConeUnion:
    parts = [pa.intersect(pb) for pa in a.pieces for pb in b.pieces]
    parts = [p for p in parts if not p.is_empty]
    if not parts:
        return ConeUnion.empty(a.dim)
    return ConeUnion.from_pieces(parts, dim=a.dim)


def _graph_convex(fset: FiniteUnionSet) -> bool:
    return len(fset.pieces) == 1


def _x_is_affine(x_set: FiniteUnionSet) -> bool:
    return (len(x_set.pieces) == 1 and not x_set.pieces[0].A)


def _inclusion_with_certificate(lhs: PosHomMap, rhs: PosHomMap):
    ok, witness = union_contains(rhs.graph.pieces, lhs.graph.pieces)
    bad = [] if ok else [[float(v) for v in witness]]
    for g in lhs.graph.generators():
        if not rhs.graph.contains(g):
            bad.append([float(v) for v in g])
    return ok and not bad, bad


# ---------------------------------------------------------------- chain rule


def intermediate_set(s1: PolyMap, s2: PolyMap, x_set: FiniteUnionSet,
                     xbar, ubar) -> FiniteUnionSet:
    """S1|_X(xbar) n S2^{-1}(ubar) as a polyhedral union in the middle space."""
    vals = s1.restrict(x_set).evaluate(xbar)
    pre = s2.inverse().evaluate(ubar)
    return vals.intersect(pre)


def chain_cq_check(s1: PolyMap, s2: PolyMap, x_set: FiniteUnionSet,
                   xbar, ubar):
    """Thm-level qualification: D*S2(w|u)(0) n D*_X S1(x|w)^{-1}(0) = {0}
    at every intermediate representative; the intermediate set must be
    bounded (the local-boundedness assumption for polyhedral data)."""
    mid = intermediate_set(s1, s2, x_set, xbar, ubar)
    if mid.is_empty_set():
        raise UnboundedIntermediate("intermediate set is empty; the pair is "
                                    "not on the graph of the composition")
    if not mid.is_bounded():
        raise UnboundedIntermediate(
            "intermediate set has recession directions; local boundedness "
            "of the fiber mapping fails")
    witnesses = []
    reps = _union_face_representatives(mid)
    for w in reps:
        d2_zero = coderivative(s2, w, ubar).value_at_zero()
        d1x = projcode_polyhedral(s1, x_set, xbar, w)
        inv_zero = d1x.map.inverse_at_zero()
        inter = _intersect_unions(d2_zero, inv_zero)
        if not _is_zero_or_empty(inter):
            witnesses.append({
                "w": [float(v) for v in w],
                "ray": [[float(v) for v in g] for g in inter.generators()][:3]})
    return not witnesses, witnesses, reps


def chain_rhs(s1: PolyMap, s2: PolyMap, x_set: FiniteUnionSet, xbar, ubar,
              intermediates=None) -> PosHomMap:
    """Union over intermediate points of D*_X S1(x|w) o D*S2(w|u)."""
    if intermediates is None:
        mid = intermediate_set(s1, s2, x_set, xbar, ubar)
        intermediates = _union_face_representatives(mid)
    m, p, n = s2.m, s1.m, s1.n
    pieces = []
    for w in intermediates:
        d2 = coderivative(s2, w, ubar)                       # m -> p
        d1x = projcode_polyhedral(s1, x_set, xbar, w).map    # p -> n
        comp = compose_pos_hom(d2, d1x)
        pieces.extend(comp.graph.pieces)
    if not pieces:
        return PosHomMap(m, n, ConeUnion.empty(m + n))
    return PosHomMap(m, n, ConeUnion.from_pieces(pieces, dim=m + n))


def chain_verify(s1: PolyMap, s2: PolyMap, x_set: FiniteUnionSet,
                 xbar, ubar) -> RuleReport:
    cq, witnesses, reps = chain_cq_check(s1, s2, x_set, xbar, ubar)
    report = RuleReport(cq_holds=cq, rhs=None, cq_witnesses=witnesses,
                        intermediate_points=[[float(v) for v in w] for w in reps])
    if not cq:
        return report
    rhs = chain_rhs(s1, s2, x_set, xbar, ubar, intermediates=reps)
    comp, warn = compose_graphs(s1, s2)
    if warn:
        report.warnings.append("composition projection has unbounded fiber "
                               "directions; closedness asserted from data")
    lhs = projcode_polyhedral(comp, x_set, xbar, ubar).map
    ok, bad = _inclusion_with_certificate(lhs, rhs)
    report.rhs = rhs
    report.lhs = lhs
    report.inclusion_holds = ok
    report.violating_rays = bad
    if (_graph_convex(s1.restrict(x_set).graph) and _graph_convex(s2.graph)
            and _x_is_affine(x_set)):
        fwd, _ = union_contains(rhs.graph.pieces, lhs.graph.pieces)
        bck, _ = union_contains(lhs.graph.pieces, rhs.graph.pieces)
        report.equality_holds = fwd and bck
    return report


# -------------------------------------------- single-valued compositions


def restricted_singlevalued_coderivative(f_components, x_set: FiniteUnionSet,
                                         xbar, z, chart: ManifoldChart | None = None
                                         ) -> FiniteUnionSet:
    """D*F|_X(xbar)(z) = grad F(xbar)^T z + N_X(xbar) (shifted cone union)."""
    import numpy as np

    from .manifold import parse_expr

    n = x_set.dim if x_set is not None else chart.ambient_dim
    comps = [parse_expr(c, n) if isinstance(c, str) else c for c in f_components]
    x = np.asarray([float(v) for v in la.vec(xbar)])
    jac = np.array([c.eval_grad(x)[1] for c in comps], dtype=float)
    shift = la.vec([float(v) for v in jac.T @ np.asarray([float(v) for v in la.vec(z)])])
    if chart is not None and x_set is None:
        normal = ConeUnion.from_pieces([chart.normal_space([float(v) for v in x])],
                                       dim=n)
    else:
        normal = limiting_normal_cone_at(x_set, xbar)
    pieces = [p.translate(shift) for p in normal.pieces]
    return FiniteUnionSet.from_pieces(pieces, dim=n)


def inner_composition_verify(s0: PolyMap, f_matrix, f_offset,
                             x_set: FiniteUnionSet, xbar, ubar) -> RuleReport:
    """Thm route for S = S0 o F with affine F (exact data end to end)."""
    M = la.mat(f_matrix)
    p_dim = len(M)
    n = len(M[0]) if M else 0
    c = la.vec(f_offset) if f_offset is not None else tuple(ZERO for _ in range(p_dim))
    if s0.n != p_dim:
        raise DimensionMismatch("inner map output feeds S0 input")
    xb = la.vec(xbar)
    fx = la.add(la.matvec(M, xb), c)

    # graph of S = S0 o F by substitution into the S0 graph constraints
    parts = []
    for piece in s0.graph.pieces:
        def transform(rows):
            out = []
            for row in rows:
                rw, ru = row[:p_dim], row[p_dim:]
                out.append(tuple(la.matvec(la.transpose(M), rw)) + tuple(ru))
            return out
        shift_b = [rhs - la.dot(row[:p_dim], c) for row, rhs in zip(piece.A, piece.b)]
        shift_d = [rhs - la.dot(row[:p_dim], c) for row, rhs in zip(piece.C, piece.d)]
        parts.append(ConvexPolyhedron.from_hrep(
            transform(piece.A), shift_b, transform(piece.C), shift_d,
            dim=n + s0.m))
    s = PolyMap(n, s0.m, FiniteUnionSet.from_pieces(parts, dim=n + s0.m))

    f_map = PolyMap.single_valued_affine(M, c)
    dxf = projcode_polyhedral(f_map, x_set, xbar, fx).map   # p -> n
    d0 = coderivative(s0, fx, ubar)                          # m -> p

    cq_cone = _intersect_unions(d0.value_at_zero(), dxf.inverse_at_zero())
    cq = _is_zero_or_empty(cq_cone)
    report = RuleReport(cq_holds=cq, rhs=None)
    if not cq:
        report.cq_witnesses = [
            [float(v) for v in g] for g in cq_cone.generators()][:4]
        return report

    rhs = compose_pos_hom(d0, dxf)
    lhs = projcode_polyhedral(s, x_set, xbar, ubar).map
    ok, bad = _inclusion_with_certificate(lhs, rhs)
    report.rhs = rhs
    report.lhs = lhs
    report.inclusion_holds = ok
    report.violating_rays = bad
    if _graph_convex(s0.graph) and _x_is_affine(x_set):
        fwd, _ = union_contains(rhs.graph.pieces, lhs.graph.pieces)
        bck, _ = union_contains(lhs.graph.pieces, rhs.graph.pieces)
        report.equality_holds = fwd and bck
    else:
        report.warnings.append(
            "regularity of the scalarized restriction is certified only for "
            "affine data with convex graphs; equality not asserted")
    return report


# ------------------------------------------------------------------ sum rules


def decomposition_set(s_list: list[PolyMap], x, u) -> FiniteUnionSet:
    """{(u_1..u_p) : u_i in S_i(x), sum u_i = u} in R^{p*m}."""
    p = len(s_list)
    m = s_list[0].m
    slices = [s.evaluate(x) for s in s_list]
    total = p * m
    combos = [()]
    for sl in slices:
        combos = [prev + (piece,) for prev in combos for piece in sl.pieces]
    sum_rows = []
    for i in range(m):
        row = [ZERO] * total
        for k in range(p):
            row[k * m + i] = la.ONE
        sum_rows.append(tuple(row))
    uvec = la.vec(u)
    parts = []
    for combo in combos:
        rows_a, rhs_a, rows_c, rhs_c = [], [], [], []
        for k, piece in enumerate(combo):
            for row, rhs in zip(piece.A, piece.b):
                rows_a.append((ZERO,) * (k * m) + tuple(row) + (ZERO,) * ((p - 1 - k) * m))
                rhs_a.append(rhs)
            for row, rhs in zip(piece.C, piece.d):
                rows_c.append((ZERO,) * (k * m) + tuple(row) + (ZERO,) * ((p - 1 - k) * m))
                rhs_c.append(rhs)
        rows_c.extend(sum_rows)
        rhs_c.extend(uvec)
        parts.append(ConvexPolyhedron.from_hrep(rows_a, rhs_a, rows_c, rhs_c,
                                                dim=total))
    return FiniteUnionSet.from_pieces(parts, dim=total)


def _sum_rule_common(s_list, x_set, xbar, ubar):
    if not s_list:
        raise DimensionMismatch("need at least one summand")
    n, m = s_list[0].n, s_list[0].m
    ssum = sum_map(s_list)
    sx = ssum.restrict(x_set)
    zbar = tuple(la.vec(xbar)) + tuple(la.vec(ubar))
    if not sx.graph.contains(zbar):
        raise UnboundedIntermediate("reference pair not on the restricted sum graph")
    delta = decomposition_set(s_list, xbar, ubar)
    if delta.is_empty_set():
        raise UnboundedDecomposition("no decomposition realizes the reference value")
    if not delta.is_bounded():
        raise UnboundedDecomposition(
            "decomposition set has recession directions; the boundedness "
            "condition fails")
    return n, m, ssum, sx, zbar, delta


def _strata_points(sx_graph: FiniteUnionSet, x_set: FiniteUnionSet, zbar, n, m):
    """Actual rational representative points (x, u) of the local strata."""
    k_local = local_cone_model(sx_graph, zbar)
    x_local = local_cone_model(x_set, zbar[:n])
    lifted = [tuple(row) + (ZERO,) * m for piece in x_local.pieces
              for row in piece.A + piece.C]
    reps = strata_representatives(k_local, extra_hyperplanes=lifted)
    eps = localization_radius(sx_graph, zbar)
    pts = []
    for zeta in reps:
        scale = sum(abs(v) for v in zeta)
        shift = la.scale(zeta, eps / (1 + scale))
        pt = tuple(a + b for a, b in zip(zbar, shift))
        if sx_graph.contains(pt):
            pts.append(pt)
    return pts


def sum_rule_1(s_list: list[PolyMap], x_set: FiniteUnionSet, xbar, ubar) -> RuleReport:
    """Sum rule with the restriction carried by the summed mapping.

    Qualification: v_i in D*S_i(xbar|u_i)(0) with 0 in sum v_i + N_X(xbar)
    forces all v_i = 0.  The right-hand side projects the summed
    coderivative graphs (plus the normal-space shift) onto the tangent cone,
    along the local strata; on manifold-like X the shift is annihilated.
    """
    n, m, ssum, sx, zbar, delta = _sum_rule_common(s_list, x_set, xbar, ubar)
    p = len(s_list)
    nx = limiting_normal_cone_at(x_set, xbar)

    # qualification over decomposition representatives
    cq_witnesses = []
    d_reps = _union_face_representatives(delta)
    for rep in d_reps:
        slices = [coderivative(s_list[k], xbar, rep[k * m:(k + 1) * m]).value_at_zero()
                  for k in range(p)]
        combos = [()]
        for sl in slices:
            combos = [prev + (piece,) for prev in combos
                      for piece in (sl.pieces or (ConvexPolyhedron.point([0] * n),))]
        for combo in combos:
            for nx_piece in (nx.pieces or (ConvexPolyhedron.point([0] * n),)):
                vcone = _decomposition_cq_cone(combo, nx_piece, n, p, negate_nx=True)
                if not vcone.is_empty and not _single_zero(vcone):
                    cq_witnesses.append({
                        "decomposition": [float(v) for v in rep],
                        "ray": [float(v) for v in (vcone.rays + vcone.lineality)[0]]})
    cq = not cq_witnesses
    report = RuleReport(cq_holds=cq, rhs=None, cq_witnesses=cq_witnesses,
                        intermediate_points=[[float(v) for v in r] for r in d_reps])
    if not cq:
        return report

    pieces = []
    x_local_set = FiniteUnionSet.from_pieces(
        list(local_cone_model(x_set, zbar[:n]).pieces), dim=n)
    for pt in _strata_points(sx.graph, x_set, zbar, n, m):
        x_here, u_here = pt[:n], pt[n:]
        t_here = tangent_cone_at(x_local_set, la.sub(x_here, zbar[:n]))
        if len(t_here.pieces) != 1:
            raise UnsupportedRestrictionSet("nonconvex tangent in sum rule")
        t_piece = t_here.pieces[0]
        n_here = t_piece.polar_cone()
        local_delta = decomposition_set(s_list, x_here, u_here)
        if local_delta.is_empty_set():
            continue
        for rep in _union_face_representatives(local_delta):
            graphs = [coderivative(s_list[k], x_here, rep[k * m:(k + 1) * m]).graph
                      for k in range(p)]
            summed = same_input_sum(graphs, m, n)
            shifted = []
            for piece in summed.pieces:
                lift_nx = ConvexPolyhedron.cone_from_generators(
                    [(ZERO,) * m + tuple(r) for r in n_here.rays],
                    [(ZERO,) * m + tuple(l) for l in n_here.lineality],
                    dim=m + n)
                shifted.append(piece.minkowski_sum(lift_nx))
            bundle = ConeUnion.from_pieces(shifted, dim=m + n)
            img = project_cone_union(t_piece, bundle, block_start=m)
            pieces.extend(img.pieces)
    rhs = PosHomMap(m, n, ConeUnion.from_pieces(pieces, dim=m + n)
                    if pieces else ConeUnion.empty(m + n))

    lhs = projcode_polyhedral(ssum, x_set, xbar, ubar).map
    ok, bad = _inclusion_with_certificate(lhs, rhs)
    report.rhs = rhs
    report.lhs = lhs
    report.inclusion_holds = ok
    report.violating_rays = bad
    if all(_graph_convex(s.restrict(x_set).graph) for s in s_list) \
            and x_set.is_convex_representable():
        fwd, _ = union_contains(rhs.graph.pieces, lhs.graph.pieces)
        bck, _ = union_contains(lhs.graph.pieces, rhs.graph.pieces)
        report.equality_holds = fwd and bck
    return report


def sum_rule_2(s_list: list[PolyMap], x_set: FiniteUnionSet, xbar, ubar) -> RuleReport:
    """Sum rule with the restriction carried by every summand.

    Qualification: v_i in D*S_i|_X(xbar|u_i)(0) with sum v_i = 0 forces all
    v_i = 0; the right-hand side sums restricted coderivatives with no
    normal-space shift.
    """
    n, m, ssum, sx, zbar, delta = _sum_rule_common(s_list, x_set, xbar, ubar)
    p = len(s_list)
    restricted = [s.restrict(x_set) for s in s_list]

    cq_witnesses = []
    d_reps = _union_face_representatives(delta)
    for rep in d_reps:
        slices = [coderivative(restricted[k], xbar, rep[k * m:(k + 1) * m]).value_at_zero()
                  for k in range(p)]
        combos = [()]
        for sl in slices:
            combos = [prev + (piece,) for prev in combos
                      for piece in (sl.pieces or (ConvexPolyhedron.point([0] * n),))]
        for combo in combos:
            vcone = _decomposition_cq_cone(combo, None, n, p, negate_nx=False)
            if not vcone.is_empty and not _single_zero(vcone):
                cq_witnesses.append({
                    "decomposition": [float(v) for v in rep],
                    "ray": [float(v) for v in (vcone.rays + vcone.lineality)[0]]})
    cq = not cq_witnesses
    report = RuleReport(cq_holds=cq, rhs=None, cq_witnesses=cq_witnesses,
                        intermediate_points=[[float(v) for v in r] for r in d_reps])
    if not cq:
        return report

    pieces = []
    x_local_set = FiniteUnionSet.from_pieces(
        list(local_cone_model(x_set, zbar[:n]).pieces), dim=n)
    for pt in _strata_points(sx.graph, x_set, zbar, n, m):
        x_here, u_here = pt[:n], pt[n:]
        t_here = tangent_cone_at(x_local_set, la.sub(x_here, zbar[:n]))
        if len(t_here.pieces) != 1:
            raise UnsupportedRestrictionSet("nonconvex tangent in sum rule")
        t_piece = t_here.pieces[0]
        local_delta = decomposition_set(s_list, x_here, u_here)
        if local_delta.is_empty_set():
            continue
        for rep in _union_face_representatives(local_delta):
            graphs = [coderivative(restricted[k], x_here, rep[k * m:(k + 1) * m]).graph
                      for k in range(p)]
            summed = same_input_sum(graphs, m, n)
            img = project_cone_union(t_piece, summed, block_start=m)
            pieces.extend(img.pieces)
    rhs = PosHomMap(m, n, ConeUnion.from_pieces(pieces, dim=m + n)
                    if pieces else ConeUnion.empty(m + n))

    lhs = projcode_polyhedral(ssum, x_set, xbar, ubar).map
    ok, bad = _inclusion_with_certificate(lhs, rhs)
    report.rhs = rhs
    report.lhs = lhs
    report.inclusion_holds = ok
    report.violating_rays = bad
    if all(_graph_convex(s.graph) for s in restricted) and x_set.is_convex_representable():
        fwd, _ = union_contains(rhs.graph.pieces, lhs.graph.pieces)
        bck, _ = union_contains(lhs.graph.pieces, rhs.graph.pieces)
        report.equality_holds = fwd and bck
    return report


def _decomposition_cq_cone(combo, nx_piece, n, p, negate_nx: bool) -> ConvexPolyhedron:
    """{(v_1..v_p) : v_i in piece_i, sum v_i in -N_X (rule 1) or = 0 (rule 2)}."""
    total = p * n
    rows_a, rhs_a, rows_c, rhs_c = [], [], [], []
    for k, piece in enumerate(combo):
        for row, rhs in zip(piece.A, piece.b):
            rows_a.append((ZERO,) * (k * n) + tuple(row) + (ZERO,) * ((p - 1 - k) * n))
            rhs_a.append(rhs)
        for row, rhs in zip(piece.C, piece.d):
            rows_c.append((ZERO,) * (k * n) + tuple(row) + (ZERO,) * ((p - 1 - k) * n))
            rhs_c.append(rhs)
    if negate_nx:
        # sum v_i in -N_X: apply the H-rep of N_X to -(sum v_i)
        for row in nx_piece.A:
            rows_a.append(tuple(-v for v in row) * p)
            rhs_a.append(ZERO)
        for row in nx_piece.C:
            rows_c.append(tuple(-v for v in row) * p)
            rhs_c.append(ZERO)
    else:
        for i in range(n):
            row = [ZERO] * total
            for k in range(p):
                row[k * n + i] = la.ONE
            rows_c.append(tuple(row))
            rhs_c.append(ZERO)
    return ConvexPolyhedron.from_hrep(rows_a, rhs_a, rows_c, rhs_c, dim=total)


def _single_zero(p: ConvexPolyhedron) -> bool:
    zero = tuple(ZERO for _ in range(p.dim))
    return p.vertices == (zero,) and not p.rays and not p.lineality
