"""Set-valued mappings as graphs; restriction, evaluation, coderivatives.

Orientation convention, fixed once: a positively homogeneous map H from
R^m to R^n stores its graph as (input, output) pairs (u*, x*), and the
defining sign flip  x* in D*S(xb|ub)(u*) <=> (x*, -u*) in N_gph  happens
inside `coderivative` (and the projectional routes), nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .cones import ConeUnion
from .errors import DimensionMismatch, PointNotOnGraph
from .geometry import ConvexPolyhedron
from .manifold import Expr, parse_expr
from .sets import (FiniteUnionSet, limiting_normal_cone_at,
                   regular_normal_cone_at)

ZERO = la.ZERO


@dataclass(frozen=True)
class PolyMap:
    """Mapping R^n => R^m represented by a polyhedral-union graph."""

    n: int
    m: int
    graph: FiniteUnionSet

    def __post_init__(self):
        if self.graph.dim != self.n + self.m:
            raise DimensionMismatch("graph dimension must be n + m")

    @staticmethod
    def from_graph_pieces(n: int, m: int, pieces) -> "PolyMap":
        return PolyMap(n, m, FiniteUnionSet.from_pieces(pieces, dim=n + m))

    @staticmethod
    def single_valued_affine(M, c=None) -> "PolyMap":
        """S(x) = {Mx + c} as a graph {(x, u) : u - Mx = c}."""
        M = la.mat(M)
        m_out = len(M)
        n_in = len(M[0]) if M else 0
        c = la.vec(c) if c is not None else tuple(ZERO for _ in range(m_out))
        rows = []
        for i in range(m_out):
            row = tuple(-v for v in M[i]) + tuple(
                la.ONE if j == i else ZERO for j in range(m_out))
            rows.append(row)
        piece = ConvexPolyhedron.from_hrep([], [], rows, c, dim=n_in + m_out)
        return PolyMap(n_in, m_out, FiniteUnionSet.from_pieces([piece], dim=n_in + m_out))

    @staticmethod
    def constant(n: int, values: FiniteUnionSet) -> "PolyMap":
        return PolyMap(n, values.dim, _lift_trailing(values, n))

    def graph_contains(self, x, u, tol=0) -> bool:
        return self.graph.contains(tuple(x) + tuple(u), tol)

    def evaluate(self, x) -> FiniteUnionSet:
        """Slice of the graph at x (empty when x is outside the domain)."""
        x = la.vec(x)
        if len(x) != self.n:
            raise DimensionMismatch("input point dimension mismatch")
        pieces = []
        for p in self.graph.pieces:
            a_x = tuple(row[:self.n] for row in p.A)
            a_u = tuple(row[self.n:] for row in p.A)
            c_x = tuple(row[:self.n] for row in p.C)
            c_u = tuple(row[self.n:] for row in p.C)
            b2 = tuple(rhs - la.dot(rx, x) for rx, rhs in zip(a_x, p.b))
            d2 = tuple(rhs - la.dot(rx, x) for rx, rhs in zip(c_x, p.d))
            pieces.append(ConvexPolyhedron.from_hrep(a_u, b2, c_u, d2, dim=self.m))
        return FiniteUnionSet.from_pieces(pieces, dim=self.m)

    def dom(self) -> FiniteUnionSet:
        proj = [[la.ONE if j == i else ZERO for j in range(self.n + self.m)]
                for i in range(self.n)]
        return self.graph.affine_image(proj, out_dim=self.n)

    def inverse(self) -> "PolyMap":
        rows = ([[ZERO] * self.n + [la.ONE if j == i else ZERO for j in range(self.m)]
                 for i in range(self.m)] +
                [[la.ONE if j == i else ZERO for j in range(self.n)] + [ZERO] * self.m
                 for i in range(self.n)])
        return PolyMap(self.m, self.n, self.graph.affine_image(rows, out_dim=self.n + self.m))

    def restrict(self, X: FiniteUnionSet) -> "PolyMap":
        if X.dim != self.n:
            raise DimensionMismatch("restriction set lives in the input space")
        return PolyMap(self.n, self.m, self.graph.intersect(X.times_full_space(self.m)))


def _lift_trailing(values: FiniteUnionSet, n: int) -> FiniteUnionSet:
    out = []
    for p in values.pieces:
        out.append(ConvexPolyhedron.from_hrep(
            [(ZERO,) * n + tuple(r) for r in p.A], p.b,
            [(ZERO,) * n + tuple(r) for r in p.C], p.d, dim=n + values.dim))
    return FiniteUnionSet.from_pieces(out, dim=n + values.dim)


@dataclass(frozen=True)
class SmoothGraphMap:
    """Graph {(x, u) : h_i(x, u) <= 0} near a reference point (inequalities
    written over variables x1..xn, u1..um)."""

    n: int
    m: int
    inequalities: tuple[Expr, ...]
    center: tuple[float, ...]
    radius: float

    @staticmethod
    def from_strings(n: int, m: int, inequalities, center, radius) -> "SmoothGraphMap":
        exprs = tuple(parse_expr(s, n, m) for s in inequalities)
        return SmoothGraphMap(n, m, exprs, tuple(float(v) for v in center), float(radius))

    def values(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.array([h.eval(z) for h in self.inequalities])

    def graph_contains(self, z, tol: float = 1e-9) -> bool:
        return bool(np.all(self.values(z) <= tol))

    def active_gradients(self, z, act_tol: float):
        """(active indices, gradient rows) at a graph point."""
        z = np.asarray(z, dtype=float)
        idx, rows = [], []
        for i, h in enumerate(self.inequalities):
            v, g = h.eval_grad(z)
            if v >= -act_tol:
                idx.append(i)
                rows.append(g)
        return idx, np.array(rows, dtype=float).reshape(len(rows), self.n + self.m)


@dataclass(frozen=True)
class PosHomMap:
    """Positively homogeneous map; graph stores (input, output) pairs."""

    input_dim: int
    output_dim: int
    graph: ConeUnion

    def __post_init__(self):
        if self.graph.dim != self.input_dim + self.output_dim:
            raise DimensionMismatch("graph dimension must be input + output")

    @staticmethod
    def zero_map(input_dim: int, output_dim: int) -> "PosHomMap":
        return PosHomMap(input_dim, output_dim,
                         ConeUnion.zero(input_dim + output_dim))

    def value_at_zero(self) -> ConeUnion:
        """H(0) as a cone union in the output space."""
        return self._slice_block(range(self.input_dim), drop_first=True)

    def inverse_at_zero(self) -> ConeUnion:
        """{y : 0 in H(y)} as a cone union in the input space."""
        return self._slice_block(
            range(self.input_dim, self.input_dim + self.output_dim), drop_first=False)

    def _slice_block(self, zero_coords, drop_first: bool) -> ConeUnion:
        dim = self.graph.dim
        rows = []
        for i in zero_coords:
            rows.append(tuple(la.ONE if j == i else ZERO for j in range(dim)))
        cut = ConvexPolyhedron.from_hrep([], [], rows, [ZERO] * len(rows), dim=dim)
        if drop_first:
            keep = range(self.input_dim, dim)
        else:
            keep = range(self.input_dim)
        sel = [[la.ONE if j == i else ZERO for j in range(dim)] for i in keep]
        pieces = []
        for p in self.graph.pieces:
            part = p.intersect(cut)
            if not part.is_empty:
                pieces.append(part.affine_image(sel))
        out_dim = len(sel)
        if not pieces:
            return ConeUnion.empty(out_dim)
        return ConeUnion.from_pieces(pieces, dim=out_dim)

    def value_at(self, y) -> FiniteUnionSet:
        """H(y) for a concrete input (a polyhedral set, not a cone)."""
        y = la.vec(y)
        pieces = []
        for p in self.graph.pieces:
            a_y = tuple(row[:self.input_dim] for row in p.A)
            a_x = tuple(row[self.input_dim:] for row in p.A)
            c_y = tuple(row[:self.input_dim] for row in p.C)
            c_x = tuple(row[self.input_dim:] for row in p.C)
            b2 = tuple(rhs - la.dot(ry, y) for ry, rhs in zip(a_y, p.b))
            d2 = tuple(rhs - la.dot(ry, y) for ry, rhs in zip(c_y, p.d))
            pieces.append(ConvexPolyhedron.from_hrep(a_x, b2, c_x, d2, dim=self.output_dim))
        return FiniteUnionSet.from_pieces(pieces, dim=self.output_dim)

    def is_zero_everywhere(self) -> bool:
        return self.graph.is_zero()

    def to_json(self) -> dict:
        return {"input_dim": self.input_dim, "output_dim": self.output_dim,
                "graph": self.graph.to_json()}


def normal_pairs_to_graph(nc: ConeUnion, n: int, m: int) -> ConeUnion:
    """Map normal pairs (p, q) in R^{n+m} to graph pairs (u*, x*) = (-q, p)."""
    rows = ([[ZERO] * n + [(-la.ONE if j == i else ZERO) for j in range(m)]
             for i in range(m)] +
            [[la.ONE if j == i else ZERO for j in range(n)] + [ZERO] * m
             for i in range(n)])
    return nc.affine_image(rows, out_dim=n + m)


def graph_to_normal_pairs(graph: ConeUnion, m: int, n: int) -> ConeUnion:
    """Inverse of normal_pairs_to_graph: (u*, x*) -> (x*, -u*)."""
    rows = ([[ZERO] * m + [la.ONE if j == i else ZERO for j in range(n)]
             for i in range(n)] +
            [[(-la.ONE if j == i else ZERO) for j in range(m)] + [ZERO] * n
             for i in range(m)])
    return graph.affine_image(rows, out_dim=n + m)


def swapped_normal_presentation(limsup: ConeUnion, n: int, m: int) -> ConeUnion:
    """Plain coordinate swap (p, q) -> (q, p) of a normal-pair cone union.

    This is the orientation in which two-dimensional coderivative graphs are
    usually drawn; reports expose it next to the graph itself.
    """
    rows = ([[ZERO] * n + [la.ONE if j == i else ZERO for j in range(m)]
             for i in range(m)] +
            [[la.ONE if j == i else ZERO for j in range(n)] + [ZERO] * m
             for i in range(n)])
    return limsup.affine_image(rows, out_dim=n + m)


# ------------------------------------------------------------- operations


def restrict(s: PolyMap, x_set: FiniteUnionSet) -> PolyMap:
    return s.restrict(x_set)


def evaluate(s: PolyMap, x) -> FiniteUnionSet:
    return s.evaluate(x)


def coderivative(s: PolyMap, xbar, ubar) -> PosHomMap:
    """Limiting coderivative D*S(xb|ub) as a positively homogeneous map."""
    pt = tuple(la.vec(xbar)) + tuple(la.vec(ubar))
    if not s.graph.contains(pt):
        raise PointNotOnGraph("reference pair is not on the graph")
    nc = limiting_normal_cone_at(s.graph, pt)
    return PosHomMap(s.m, s.n, normal_pairs_to_graph(nc, s.n, s.m))


def regular_coderivative(s: PolyMap, xbar, ubar) -> PosHomMap:
    pt = tuple(la.vec(xbar)) + tuple(la.vec(ubar))
    if not s.graph.contains(pt):
        raise PointNotOnGraph("reference pair is not on the graph")
    nc = regular_normal_cone_at(s.graph, pt)
    union = ConeUnion.from_pieces([nc], dim=s.n + s.m) if not nc.is_empty \
        else ConeUnion.empty(s.n + s.m)
    return PosHomMap(s.m, s.n, normal_pairs_to_graph(union, s.n, s.m))


def compose_graphs(s1: PolyMap, s2: PolyMap) -> tuple[PolyMap, bool]:
    """Graph of S2 o S1 with a flag when a fiber direction is unbounded.

    For polyhedral graphs the projected graph is exact and closed; the flag
    reports recession directions living purely in the intermediate block,
    where outer semicontinuity of the composition needs a separate argument.
    """
    if s1.m != s2.n:
        raise DimensionMismatch("output dim of S1 must equal input dim of S2")
    n, p, m = s1.n, s1.m, s2.m
    total = n + p + m
    unbounded = False
    parts = []
    for g1 in s1.graph.pieces:
        lifted1 = ConvexPolyhedron.from_hrep(
            [tuple(r) + (ZERO,) * m for r in g1.A], g1.b,
            [tuple(r) + (ZERO,) * m for r in g1.C], g1.d, dim=total)
        for g2 in s2.graph.pieces:
            lifted2 = ConvexPolyhedron.from_hrep(
                [(ZERO,) * n + tuple(r) for r in g2.A], g2.b,
                [(ZERO,) * n + tuple(r) for r in g2.C], g2.d, dim=total)
            triple = lifted1.intersect(lifted2)
            if triple.is_empty:
                continue
            for r in triple.rays + triple.lineality:
                if la.is_zero(r[:n]) and la.is_zero(r[n + p:]) and not la.is_zero(r[n:n + p]):
                    unbounded = True
            sel = [[la.ONE if j == i else ZERO for j in range(total)] for i in range(n)]
            sel += [[la.ONE if j == n + p + i else ZERO for j in range(total)]
                    for i in range(m)]
            parts.append(triple.affine_image(sel))
    graph = FiniteUnionSet.from_pieces(parts, dim=n + m) if parts \
        else FiniteUnionSet.empty(n + m)
    return PolyMap(n, m, graph), unbounded


def sum_graph(maps: list[PolyMap], x) -> FiniteUnionSet:
    """Pointwise Minkowski sum of the values at x."""
    if not maps:
        raise DimensionMismatch("need at least one summand")
    n, m = maps[0].n, maps[0].m
    for s in maps:
        if (s.n, s.m) != (n, m):
            raise DimensionMismatch("summands must share input/output dims")
    out = maps[0].evaluate(x)
    for s in maps[1:]:
        if out.is_empty_set():
            return out
        out = out.minkowski_sum(s.evaluate(x))
    return out


def sum_map(maps: list[PolyMap]) -> PolyMap:
    """Graph of S_1 + ... + S_p, exact via the fiber product."""
    if not maps:
        raise DimensionMismatch("need at least one summand")
    n, m = maps[0].n, maps[0].m
    for s in maps:
        if (s.n, s.m) != (n, m):
            raise DimensionMismatch("summands must share input/output dims")
    p = len(maps)
    total = n + p * m
    lifted_sets = []
    for i, s in enumerate(maps):
        parts = []
        for g in s.graph.pieces:
            def lift_row(row):
                return (tuple(row[:n]) + (ZERO,) * (i * m) + tuple(row[n:])
                        + (ZERO,) * ((p - 1 - i) * m))
            parts.append(ConvexPolyhedron.from_hrep(
                [lift_row(r) for r in g.A], g.b,
                [lift_row(r) for r in g.C], g.d, dim=total))
        lifted_sets.append(FiniteUnionSet.from_pieces(parts, dim=total))
    fiber = lifted_sets[0]
    for ls in lifted_sets[1:]:
        fiber = fiber.intersect(ls)
    sel = [[la.ONE if j == i else ZERO for j in range(total)] for i in range(n)]
    for i in range(m):
        row = [ZERO] * total
        for k in range(p):
            row[n + k * m + i] = la.ONE
        sel.append(row)
    return PolyMap(n, m, fiber.affine_image(sel, out_dim=n + m))
