"""Closed sets as finite unions of convex polyhedra.

Tangent, regular normal, and limiting normal cones at a point are exact.
The limiting cone replaces the outer limit with finite enumeration: the set
is localized at x (tangent cones of the pieces through x describe it
exactly in a small ball), the local cone complex is stratified by every
constraint hyperplane, and a relative-interior representative of each
stratum supplies one regular normal cone to the union.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _linalg as la
from .cones import ConeUnion
from .errors import DimensionMismatch, ScaleExceeded
from .geometry import ConvexPolyhedron

ZERO = la.ZERO

DEFAULT_STRATA_BUDGET = 20_000


@dataclass(frozen=True)
class FiniteUnionSet:
    dim: int
    pieces: tuple[ConvexPolyhedron, ...] = ()

    @staticmethod
    def from_pieces(pieces, dim: int | None = None) -> "FiniteUnionSet":
        pieces = [p for p in pieces if not p.is_empty]
        if dim is None:
            if not pieces:
                raise DimensionMismatch("cannot infer dimension of empty set")
            dim = pieces[0].dim
        for p in pieces:
            if p.dim != dim:
                raise DimensionMismatch("piece dimension mismatch")
        kept: list[ConvexPolyhedron] = []
        for p in sorted(pieces, key=lambda q: (q.A, q.b, q.C, q.d)):
            if any(q.contains_set(p) for q in kept):
                continue
            kept = [q for q in kept if not p.contains_set(q)]
            kept.append(p)
        return FiniteUnionSet(dim, tuple(kept))

    @staticmethod
    def empty(dim: int) -> "FiniteUnionSet":
        return FiniteUnionSet(dim, ())

    @staticmethod
    def full_space(dim: int) -> "FiniteUnionSet":
        return FiniteUnionSet.from_pieces([ConvexPolyhedron.full_space(dim)])

    @staticmethod
    def from_polyhedron(p: ConvexPolyhedron) -> "FiniteUnionSet":
        return FiniteUnionSet.from_pieces([p], dim=p.dim)

    def is_empty_set(self) -> bool:
        return not self.pieces

    def contains(self, z, tol=0) -> bool:
        z = la.vec(z)
        if len(z) != self.dim:
            raise DimensionMismatch("point dimension mismatch")
        return any(p.contains(z, tol) for p in self.pieces)

    def intersect(self, other: "FiniteUnionSet") -> "FiniteUnionSet":
        if self.dim != other.dim:
            raise DimensionMismatch("set dimension mismatch")
        parts = [p.intersect(q) for p in self.pieces for q in other.pieces]
        return FiniteUnionSet.from_pieces(parts, dim=self.dim)

    def union(self, other: "FiniteUnionSet") -> "FiniteUnionSet":
        if self.dim != other.dim:
            raise DimensionMismatch("set dimension mismatch")
        return FiniteUnionSet.from_pieces(self.pieces + other.pieces, dim=self.dim)

    def affine_image(self, M, c=None, out_dim: int | None = None) -> "FiniteUnionSet":
        imgs = [p.affine_image(M, c) for p in self.pieces]
        if out_dim is None:
            out_dim = len(la.mat(M))
        return FiniteUnionSet.from_pieces(imgs, dim=out_dim)

    def times_full_space(self, m: int) -> "FiniteUnionSet":
        """Cartesian product with R^m (trailing coordinates free)."""
        out = []
        for p in self.pieces:
            out.append(ConvexPolyhedron.from_hrep(
                [row + (ZERO,) * m for row in p.A], p.b,
                [row + (ZERO,) * m for row in p.C], p.d, dim=self.dim + m))
        return FiniteUnionSet.from_pieces(out, dim=self.dim + m)

    def minkowski_sum(self, other: "FiniteUnionSet") -> "FiniteUnionSet":
        if self.dim != other.dim:
            raise DimensionMismatch("set dimension mismatch")
        parts = [p.minkowski_sum(q) for p in self.pieces for q in other.pieces]
        return FiniteUnionSet.from_pieces(parts, dim=self.dim)

    def is_bounded(self) -> bool:
        return all(p.is_bounded() for p in self.pieces)

    def is_convex_representable(self) -> bool:
        return len(self.pieces) <= 1

    def subset_of(self, other: "FiniteUnionSet") -> bool:
        from .geometry import union_contains

        ok, _ = union_contains(other.pieces, self.pieces)
        return ok

    def set_equal(self, other: "FiniteUnionSet") -> bool:
        """Exact equality via arrangement-refined containment both ways."""
        return self.subset_of(other) and other.subset_of(self)

    def to_json(self) -> dict:
        return {"dim": self.dim, "pieces": [p.vrep_float() for p in self.pieces]}


# ------------------------------------------------------------------ cones


def tangent_cone_at(c: FiniteUnionSet, x) -> ConeUnion:
    """Union of the active-constraint cones of the pieces through x."""
    x = la.vec(x)
    if not c.contains(x):
        return ConeUnion.empty(c.dim)
    cones = [p.tangent_cone_at(x) for p in c.pieces if p.contains(x)]
    return ConeUnion.from_pieces(cones, dim=c.dim)


def regular_normal_cone_at(c: FiniteUnionSet, x) -> ConvexPolyhedron:
    """Polar of the tangent cone; intersection of the per-piece polars."""
    x = la.vec(x)
    if not c.contains(x):
        return ConvexPolyhedron.empty(c.dim)
    t = tangent_cone_at(c, x)
    out = ConvexPolyhedron.full_space(c.dim)
    for piece in t.pieces:
        out = out.intersect(piece.polar_cone())
    return out


def local_cone_model(c: FiniteUnionSet, x) -> ConeUnion:
    """Cone union K with C n B(x, eps) = x + K n B(0, eps) for small eps."""
    return tangent_cone_at(c, x)


def localization_radius(c: FiniteUnionSet, x) -> la.Fraction:
    """Largest box radius within which only the active structure matters.

    Uses the minimum nonzero constraint slack at x over pieces containing x,
    divided by 4 (scaled per row).  Representative points for the outer
    limit are placed inside this radius (the result is scale-invariant).
    """
    x = la.vec(x)
    slacks = []
    for p in c.pieces:
        if not p.contains(x):
            continue
        for row, rhs in zip(p.A, p.b):
            s = rhs - la.dot(row, x)
            if s > 0:
                slacks.append(s / _rownorm1(row))
    if not slacks:
        return la.frac(1)
    return min(slacks) / 4


def _rownorm1(row) -> la.Fraction:
    s = sum(abs(v) for v in row)
    return s if s > 0 else la.ONE


# -------------------------------------------------------- stratification


def _signature(k: ConeUnion, z: la.Vec):
    sig = []
    for idx, p in enumerate(k.pieces):
        if not p.contains(z):
            continue
        act = frozenset(i for i, (row, rhs) in enumerate(zip(p.A, p.b))
                        if la.dot(row, z) == rhs)
        sig.append((idx, act))
    return tuple(sig)


def strata_representatives(k: ConeUnion, extra_hyperplanes=(),
                           budget: int = DEFAULT_STRATA_BUDGET) -> list[la.Vec]:
    """One relative-interior point per stratum of the arrangement of k.

    The arrangement refines every piece by every constraint hyperplane of
    every piece (plus caller-supplied ones), so each returned point has a
    locally constant membership/activity signature.  The origin is always
    included.
    """
    if k.is_empty_union():
        return []
    hyperplanes: set[la.Vec] = set()
    for p in k.pieces:
        for row in p.A + p.C:
            hyperplanes.add(la.canon_sign(row))
    for row in extra_hyperplanes:
        hyperplanes.add(la.canon_sign(la.vec(row)))
    hyperplanes.discard(tuple(ZERO for _ in range(k.dim)))

    from .geometry import refine_by_hyperplanes

    reps: dict = {}
    zero = tuple(ZERO for _ in range(k.dim))
    reps[_signature(k, zero)] = zero
    hyps = [(h, ZERO) for h in sorted(hyperplanes)]
    nodes = 0
    for p in k.pieces:
        for cell in refine_by_hyperplanes(p, hyps):
            for face in cell.faces():
                nodes += 1
                if nodes > budget:
                    raise ScaleExceeded("stratification exceeds node budget")
                z = face.relative_interior_point
                sig = _signature(k, z)
                if sig not in reps:
                    reps[sig] = z
    return list(reps.values())


def regular_normal_cone_of_union_at(k: ConeUnion, z: la.Vec) -> ConvexPolyhedron:
    """Polar of the tangent cone of the union at a member point."""
    out = ConvexPolyhedron.full_space(k.dim)
    hit = False
    for p in k.pieces:
        if p.contains(z):
            hit = True
            out = out.intersect(p.tangent_cone_at(z).polar_cone())
    if not hit:
        return ConvexPolyhedron.empty(k.dim)
    return out


def limiting_normal_cone_of_union_at_origin(k: ConeUnion,
                                            budget: int = DEFAULT_STRATA_BUDGET) -> ConeUnion:
    """Outer limit of regular normal cones of the cone union at 0.

    Scaling invariance makes every stratum reachable along sequences to the
    origin, so the limit is the union of the per-stratum regular cones.
    """
    if k.is_empty_union():
        return ConeUnion.empty(k.dim)
    cones = []
    for z in strata_representatives(k, budget=budget):
        nc = regular_normal_cone_of_union_at(k, z)
        if not nc.is_empty:
            cones.append(nc)
    return ConeUnion.from_pieces(cones, dim=k.dim)


def limiting_normal_cone_at(c: FiniteUnionSet, x,
                            budget: int = DEFAULT_STRATA_BUDGET) -> ConeUnion:
    x = la.vec(x)
    if not c.contains(x):
        return ConeUnion.empty(c.dim)
    k = local_cone_model(c, x)
    return limiting_normal_cone_of_union_at_origin(k, budget=budget)
