"""Algebra on finite unions of polyhedral cones.

The image of a cone union under the metric projection onto a convex
polyhedral cone T is computed exactly through the normal-manifold cells
of T: on the cell F + (polar(T) n span(F)^perp) attached to a face F, the
projection acts as the orthogonal projector onto span(F).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .errors import DimensionMismatch, EmptyCone, NotACone
from .geometry import ConvexPolyhedron

ZERO = la.ZERO


@dataclass(frozen=True)
class ConeUnion:
    """Finite union of polyhedral cones, canonical: no piece inside another."""

    dim: int
    pieces: tuple[ConvexPolyhedron, ...] = ()

    @staticmethod
    def from_pieces(pieces, dim: int | None = None) -> "ConeUnion":
        pieces = [p for p in pieces if not p.is_empty]
        if dim is None:
            if not pieces:
                raise DimensionMismatch("cannot infer dimension of empty union")
            dim = pieces[0].dim
        for p in pieces:
            if p.dim != dim:
                raise DimensionMismatch("piece dimension mismatch")
            if not p.is_cone():
                raise NotACone("cone union pieces must be cones")
        kept: list[ConvexPolyhedron] = []
        for p in sorted(pieces, key=_piece_key):
            if any(q.contains_set(p) for q in kept):
                continue
            kept = [q for q in kept if not p.contains_set(q)]
            kept.append(p)
        kept.sort(key=_piece_key)
        return ConeUnion(dim, tuple(kept))

    @staticmethod
    def zero(dim: int) -> "ConeUnion":
        return ConeUnion.from_pieces(
            [ConvexPolyhedron.point([0] * dim)], dim=dim)

    @staticmethod
    def full(dim: int) -> "ConeUnion":
        return ConeUnion.from_pieces([ConvexPolyhedron.full_space(dim)], dim=dim)

    @staticmethod
    def empty(dim: int) -> "ConeUnion":
        return ConeUnion(dim, ())

    @staticmethod
    def from_rays(rays, lineality=(), dim: int | None = None) -> "ConeUnion":
        return ConeUnion.from_pieces(
            [ConvexPolyhedron.cone_from_generators(rays, lineality, dim=dim)], dim=dim)

    def is_empty_union(self) -> bool:
        return not self.pieces

    def is_zero(self) -> bool:
        zero = tuple(ZERO for _ in range(self.dim))
        return bool(self.pieces) and all(
            p.vertices == (zero,) and not p.rays and not p.lineality
            for p in self.pieces)

    def contains(self, z, tol=0) -> bool:
        z = la.vec(z)
        if len(z) != self.dim:
            raise DimensionMismatch("point dimension mismatch")
        return any(p.contains(z, tol) for p in self.pieces)

    def union(self, other: "ConeUnion") -> "ConeUnion":
        if self.dim != other.dim:
            raise DimensionMismatch("union dimension mismatch")
        return ConeUnion.from_pieces(self.pieces + other.pieces, dim=self.dim)

    def intersect_piecewise(self, poly: ConvexPolyhedron) -> "ConeUnion":
        return ConeUnion.from_pieces(
            [p.intersect(poly) for p in self.pieces], dim=self.dim)

    def affine_image(self, M, out_dim: int | None = None) -> "ConeUnion":
        imgs = [p.affine_image(M) for p in self.pieces]
        if out_dim is None:
            out_dim = len(la.mat(M))
        return ConeUnion.from_pieces(imgs, dim=out_dim)

    def scale(self, lam) -> "ConeUnion":
        lam = la.frac(lam)
        m = tuple(tuple(lam if i == j else ZERO for j in range(self.dim))
                  for i in range(self.dim))
        return self.affine_image(m, out_dim=self.dim)

    def generators(self):
        """All nonzero generator rays (lineality folded as +-)."""
        out = []
        for p in self.pieces:
            out.extend(p.rays)
            for l in p.lineality:
                out.append(l)
                out.append(la.neg(l))
        return out

    def unit_generators_float(self):
        gens = []
        for g in self.generators():
            v = np.array(la.vec_float(g), dtype=float)
            n = np.linalg.norm(v)
            if n > 0:
                gens.append(v / n)
        return gens

    def to_json(self) -> dict:
        return {"dim": self.dim, "pieces": [p.vrep_float() for p in self.pieces]}


def _piece_key(p: ConvexPolyhedron):
    return (p.affine_dim(), p.A, p.b, p.C, p.d, p.vertices, p.rays, p.lineality)


# ---------------------------------------------------------------- operations


def cone_member(k: ConeUnion, z, tol=0) -> bool:
    return k.contains(z, tol)


def project_onto_convex_cone(t: ConvexPolyhedron, z) -> la.Vec:
    if not t.is_cone():
        raise NotACone("projection target must be a convex cone")
    p = t.project_point(z)
    assert p is not None
    return p


def moreau_decomposition(t: ConvexPolyhedron, z) -> tuple[la.Vec, la.Vec]:
    """z = p + q with p in T, q in polar(T), <p, q> = 0 (exact)."""
    p = project_onto_convex_cone(t, z)
    q = project_onto_convex_cone(t.polar_cone(), z)
    return p, q


def projection_cells(t: ConvexPolyhedron):
    """Normal-manifold cells of proj_T: list of (cell, projector matrix)."""
    if not t.is_cone():
        raise NotACone("cells are defined for convex cones")
    polar = t.polar_cone()
    cells = []
    for face in t.faces():
        fp = face.polyhedron
        span_rows = fp.rays + fp.lineality
        proj = la.projector_onto_span(span_rows, t.dim)
        # N_F = polar(T) n span(F)^perp, as the span rows annihilate it
        nf = polar.intersect(ConvexPolyhedron.from_hrep(
            [], [], span_rows, [ZERO] * len(span_rows), dim=t.dim)) if span_rows else polar
        cell = ConvexPolyhedron.cone_from_generators(
            fp.rays + nf.rays, fp.lineality + nf.lineality, dim=t.dim)
        cells.append((cell, proj))
    return cells


class ConeProjector:
    """Float-fast metric projection onto a convex polyhedral cone.

    Cells and per-cell linear projectors are computed exactly once; each
    apply() is a cell lookup plus one matrix action.
    """

    def __init__(self, t: ConvexPolyhedron):
        self.dim = t.dim
        self._cells = []
        for cell, proj in projection_cells(t):
            hf = cell.hrep_float()
            self._cells.append((
                np.array(hf["A"], dtype=float).reshape(len(hf["A"]), t.dim),
                np.array(hf["b"], dtype=float),
                np.array(hf["C"], dtype=float).reshape(len(hf["C"]), t.dim),
                np.array(hf["d"], dtype=float),
                np.array([[float(x) for x in row] for row in proj]),
            ))

    def apply(self, z: np.ndarray) -> np.ndarray:
        best, best_viol = None, math.inf
        for A, b, C, d, P in self._cells:
            viol = 0.0
            if len(A):
                viol = max(viol, float(np.max(A @ z - b, initial=0.0)))
            if len(C):
                viol = max(viol, float(np.max(np.abs(C @ z - d), initial=0.0)))
            if viol < best_viol:
                best_viol, best = viol, P
            if viol <= 1e-12:
                break
        assert best is not None
        return best @ z


def project_cone_union(t: ConvexPolyhedron, k: ConeUnion,
                       trailing: int | None = None,
                       block_start: int = 0) -> ConeUnion:
    """Exact image of the union k under proj_T acting on one coordinate block.

    T acts on coordinates [block_start, block_start + t.dim); the rest pass
    through unchanged.  `trailing` (coordinates after the block) defaults to
    whatever remains.
    """
    if trailing is None:
        trailing = k.dim - t.dim - block_start
    if trailing < 0 or block_start < 0 or block_start + t.dim + trailing != k.dim:
        raise DimensionMismatch("projection blocks do not cover the union dim")
    if k.is_empty_union():
        return ConeUnion.empty(k.dim)
    n = t.dim
    full = k.dim
    s = block_start
    out: list[ConvexPolyhedron] = []
    for cell, proj in projection_cells(t):
        lifted = ConvexPolyhedron.from_hrep(
            [(ZERO,) * s + tuple(row) + (ZERO,) * trailing for row in cell.A], cell.b,
            [(ZERO,) * s + tuple(row) + (ZERO,) * trailing for row in cell.C], cell.d,
            dim=full)
        block = tuple(
            tuple(proj[i - s][j - s] if s <= i < s + n and s <= j < s + n else
                  (la.ONE if i == j else ZERO)
                  for j in range(full))
            for i in range(full))
        for piece in k.pieces:
            part = piece.intersect(lifted)
            if part.is_empty:
                continue
            out.append(part.affine_image(block))
    return ConeUnion.from_pieces(out, dim=full)


def cone_union_equal(k1: ConeUnion, k2: ConeUnion, tol=0):
    """Exact set equality of the two unions; returns (equal, violating_rays).

    Generator membership both ways is the fast necessary check (it supplies
    the certificate rays); equality itself is decided by full containment of
    the arrangement-refined cells, which generator tests alone can miss.
    """
    from .geometry import union_contains

    if k1.dim != k2.dim:
        raise DimensionMismatch("union dimension mismatch")
    if k1.is_empty_union() or k2.is_empty_union():
        return k1.is_empty_union() == k2.is_empty_union(), []
    bad = []
    for a, b in ((k1, k2), (k2, k1)):
        for g in a.generators():
            if not b.contains(g, tol):
                bad.append(tuple(float(x) for x in g))
    if bad:
        return False, bad
    for a, b in ((k1, k2), (k2, k1)):
        ok, witness = union_contains(b.pieces, a.pieces)
        if not ok:
            return False, [tuple(float(x) for x in witness)]
    return True, []


def sphere_hausdorff(k1: ConeUnion, k2: ConeUnion,
                     directions: int = 10_000, seed: int = 0) -> float:
    """Hausdorff distance between the unit-sphere slices, sampled + refined.

    For a convex piece P and unit d, the nearest point of P n S to d is
    proj_P(d) normalized whenever the projection is nonzero, so the
    per-piece refinement is exact; sampling only affects which directions
    of k1/k2 are probed.
    """
    if k1.dim != k2.dim:
        raise DimensionMismatch("union dimension mismatch")
    for k in (k1, k2):
        if k.is_empty_union() or k.is_zero():
            raise EmptyCone("sphere slice is empty")
    rng = np.random.default_rng(seed)

    def sample_unit(k: ConeUnion):
        dirs = list(k.unit_generators_float())
        per_piece = max(1, directions // max(1, len(k.pieces)))
        for p in k.pieces:
            gens = [np.array(la.vec_float(g), dtype=float)
                    for g in p.rays + p.lineality + tuple(la.neg(l) for l in p.lineality)]
            gens = [g for g in gens if np.linalg.norm(g) > 0]
            if not gens:
                continue
            w = rng.exponential(1.0, size=(per_piece, len(gens)))
            pts = w @ np.array(gens)
            nrm = np.linalg.norm(pts, axis=1)
            keep = nrm > 1e-12
            dirs.extend(pts[keep] / nrm[keep, None])
        return dirs

    def make_dist(k: ConeUnion):
        projectors = [ConeProjector(p) for p in k.pieces]
        gen_units = [np.array(g) for g in k.unit_generators_float()]

        def dist_to(d: np.ndarray) -> float:
            best = math.inf
            for proj in projectors:
                pf = proj.apply(d)
                nrm = np.linalg.norm(pf)
                if nrm > 1e-12:
                    best = min(best, float(np.linalg.norm(d - pf / nrm)))
            for g in gen_units:
                best = min(best, float(np.linalg.norm(d - g)))
            return best

        return dist_to

    h = 0.0
    for a, b in ((k1, k2), (k2, k1)):
        dist_to = make_dist(b)
        for d in sample_unit(a):
            h = max(h, dist_to(d))
    return h
