"""Exact convex-polyhedral kernel.

Polyhedra are kept in both descriptions: {z : Az <= b, Cz = d} and
conv(vertices) + cone(rays) + span(lineality).  All arithmetic is exact
rational (inputs are converted without rounding), so representation
conversion, face enumeration, emptiness and equality are decided exactly;
float views exist only for presentation and for the sampling engines.

Conversion both ways runs the double description method on the
homogenization cone; the V->H direction goes through the polar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import _linalg as la
from .errors import DimensionMismatch, NotACone, ScaleExceeded

ZERO = la.ZERO
ONE = la.ONE

# desk-scale guards
MAX_DIM = 12
MAX_ROWS = 96
DEFAULT_FACE_BUDGET = 50_000


def _check_scale(dim: int, nrows: int) -> None:
    if dim > MAX_DIM or nrows > MAX_ROWS:
        raise ScaleExceeded(f"instance beyond desk scale: dim={dim}, rows={nrows}")


def dd_cone(ineqs: la.Mat, eqs: la.Mat, n: int) -> tuple[la.Mat, la.Mat]:
    """Minimal generators (rays, lineality) of {x : ineqs x <= 0, eqs x = 0}.

    Incremental double description with the combinatorial adjacency test;
    lineality is pivoted out one dimension per cutting constraint.
    """
    _check_scale(n, len(ineqs) + len(eqs))
    lin: list[la.Vec] = [la.canon_sign(v) for v in la.nullspace(eqs, n)] if eqs else list(la.identity(n))
    rays: list[tuple[la.Vec, frozenset[int]]] = []

    for idx, a in enumerate(ineqs):
        if la.is_zero(a):
            continue
        pivot = None
        for li, l in enumerate(lin):
            if la.dot(a, l) != 0:
                pivot = li
                break
        if pivot is not None:
            l0 = lin.pop(pivot)
            v0 = la.dot(a, l0)
            r0 = l0 if v0 < 0 else la.neg(l0)
            vr0 = -abs(v0)
            lin = [la.canon_sign(la.sub(l, la.scale(r0, la.dot(a, l) / vr0))) for l in lin]
            new_rays = []
            for r, zset in rays:
                rp = la.sub(r, la.scale(r0, la.dot(a, r) / vr0))
                new_rays.append((la.primitive(rp), zset | {idx}))
            prior = frozenset(range(idx))
            new_rays.append((la.primitive(r0), prior))
            rays = new_rays
            continue
        # lineality orthogonal to a: classic ray split
        vals = [la.dot(a, r) for r, _ in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        zer = [i for i, v in enumerate(vals) if v == 0]
        neg_ = [i for i, v in enumerate(vals) if v < 0]
        if not pos:
            rays = [(r, z | {idx}) if vals[i] == 0 else (r, z)
                    for i, (r, z) in enumerate(rays)]
            continue
        kept = [(rays[i][0], rays[i][1] | {idx}) for i in zer]
        kept += [rays[i] for i in neg_]
        seen = {r for r, _ in kept}
        for ip in pos:
            rp, zp = rays[ip]
            for im in neg_:
                rm, zm = rays[im]
                common = zp & zm
                adjacent = True
                for k, (rk, zk) in enumerate(rays):
                    if k in (ip, im):
                        continue
                    if common <= zk:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                w = la.primitive(la.sub(la.scale(rm, vals[ip]), la.scale(rp, vals[im])))
                if la.is_zero(w) or w in seen:
                    continue
                seen.add(w)
                kept.append((w, common | {idx}))
        rays = kept

    ray_vecs = sorted({la.primitive(r) for r, _ in rays if not la.is_zero(r)})
    lin_vecs = sorted({la.canon_sign(l) for l in lin if not la.is_zero(l)})
    # reduce rays modulo the lineality span and drop duplicates
    if lin_vecs:
        proj = la.projector_onto_span(tuple(lin_vecs), n)
        comp = tuple(la.sub(r, la.matvec(proj, r)) for r in ray_vecs)
        reduced = sorted({la.primitive(r) for r in comp if not la.is_zero(r)})
        ray_vecs = list(reduced)
    return tuple(ray_vecs), tuple(lin_vecs)


@dataclass(frozen=True)
class ConvexPolyhedron:
    """One convex piece: {z : Az <= b, Cz = d}, canonical on construction."""

    dim: int
    A: la.Mat = ()
    b: la.Vec = ()
    C: la.Mat = ()
    d: la.Vec = ()
    vertices: la.Mat = ()
    rays: la.Mat = ()
    lineality: la.Mat = ()
    is_empty: bool = field(default=False)

    # -- construction -------------------------------------------------

    @staticmethod
    def empty(dim: int) -> "ConvexPolyhedron":
        return ConvexPolyhedron(dim=dim, is_empty=True)

    @staticmethod
    def full_space(dim: int) -> "ConvexPolyhedron":
        return ConvexPolyhedron.from_hrep([], [], dim=dim)

    @staticmethod
    def from_hrep(A, b, C=(), d=(), dim: int | None = None) -> "ConvexPolyhedron":
        A = la.mat(A) if A else ()
        b = la.vec(b) if b is not None else ()
        C = la.mat(C) if C else ()
        d = la.vec(d) if d is not None else ()
        if dim is None:
            if A:
                dim = len(A[0])
            elif C:
                dim = len(C[0])
            else:
                raise DimensionMismatch("cannot infer ambient dimension")
        for m_ in (A, C):
            for row in m_:
                if len(row) != dim:
                    raise DimensionMismatch("constraint row length != dim")
        if len(A) != len(b) or len(C) != len(d):
            raise DimensionMismatch("rhs length mismatch")
        vr = _hrep_to_vrep(A, b, C, d, dim)
        if vr is None:
            return ConvexPolyhedron.empty(dim)
        verts, rays, lin = vr
        A2, b2, C2, d2 = _vrep_to_hrep(verts, rays, lin, dim)
        return ConvexPolyhedron(dim, A2, b2, C2, d2, verts, rays, lin)

    @staticmethod
    def from_vrep(vertices=(), rays=(), lineality=(), dim: int | None = None) -> "ConvexPolyhedron":
        verts = la.mat(vertices) if vertices else ()
        rys = la.mat(rays) if rays else ()
        lin = la.mat(lineality) if lineality else ()
        if dim is None:
            for m_ in (verts, rys, lin):
                if m_:
                    dim = len(m_[0])
                    break
            if dim is None:
                raise DimensionMismatch("cannot infer ambient dimension")
        for m_ in (verts, rys, lin):
            for row in m_:
                if len(row) != dim:
                    raise DimensionMismatch("generator length != dim")
        if not (verts or rys or lin):
            return ConvexPolyhedron.empty(dim)
        if not verts:
            # a nonempty generator description without points is anchored at 0
            verts = (tuple(ZERO for _ in range(dim)),)
        A, b, C, d = _vrep_to_hrep(verts, rys, lin, dim)
        vr = _hrep_to_vrep(A, b, C, d, dim)
        assert vr is not None
        return ConvexPolyhedron(dim, A, b, C, d, *vr)

    @staticmethod
    def cone_from_generators(rays=(), lineality=(), dim: int | None = None) -> "ConvexPolyhedron":
        """Conic hull of the generators; no generators yield the cone {0}."""
        if not rays and not lineality:
            if dim is None:
                raise DimensionMismatch("cannot infer ambient dimension")
            return ConvexPolyhedron.point([0] * dim)
        return ConvexPolyhedron.from_vrep((), rays, lineality, dim=dim)

    @staticmethod
    def point(z) -> "ConvexPolyhedron":
        z = la.vec(z)
        return ConvexPolyhedron.from_vrep([z], dim=len(z))

    # -- predicates ----------------------------------------------------

    def contains(self, z, tol: Fraction | float = 0) -> bool:
        if self.is_empty:
            return False
        z = la.vec(z)
        if len(z) != self.dim:
            raise DimensionMismatch("point dimension mismatch")
        t = la.frac(tol)
        for row, rhs in zip(self.A, self.b):
            if la.dot(row, z) > rhs + t * _row_scale(row):
                return False
        for row, rhs in zip(self.C, self.d):
            if abs(la.dot(row, z) - rhs) > t * _row_scale(row):
                return False
        return True

    def recession_contains(self, r) -> bool:
        if self.is_empty:
            return False
        r = la.vec(r)
        return (all(la.dot(row, r) <= 0 for row in self.A)
                and all(la.dot(row, r) == 0 for row in self.C))

    def is_cone(self) -> bool:
        if self.is_empty:
            return False
        zero = tuple(ZERO for _ in range(self.dim))
        if not self.contains(zero):
            return False
        return all(v == zero for v in self.vertices)

    def contains_set(self, other: "ConvexPolyhedron") -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return (all(self.contains(v) for v in other.vertices)
                and all(self.recession_contains(r) for r in other.rays)
                and all(self.recession_contains(l) and self.recession_contains(la.neg(l))
                        for l in other.lineality))

    def set_equal(self, other: "ConvexPolyhedron") -> bool:
        return self.contains_set(other) and other.contains_set(self)

    def affine_dim(self) -> int:
        if self.is_empty:
            return -1
        return self.dim - la.rank(self.C)

    def is_bounded(self) -> bool:
        return not self.is_empty and not self.rays and not self.lineality

    # -- derived points -------------------------------------------------

    def relative_interior_point(self) -> la.Vec:
        if self.is_empty:
            raise ValueError("empty polyhedron has no relative interior")
        n = len(self.vertices)
        acc = tuple(ZERO for _ in range(self.dim))
        for v in self.vertices:
            acc = la.add(acc, v)
        pt = la.scale(acc, Fraction(1, n))
        for r in self.rays:
            pt = la.add(pt, r)
        return pt

    # -- operations ------------------------------------------------------

    def intersect(self, other: "ConvexPolyhedron") -> "ConvexPolyhedron":
        if self.dim != other.dim:
            raise DimensionMismatch("ambient dimensions differ")
        if self.is_empty or other.is_empty:
            return ConvexPolyhedron.empty(self.dim)
        return ConvexPolyhedron.from_hrep(
            self.A + other.A, self.b + other.b,
            self.C + other.C, self.d + other.d, dim=self.dim)

    def affine_image(self, M, c=None) -> "ConvexPolyhedron":
        M = la.mat(M)
        out_dim = len(M)
        if M and len(M[0]) != self.dim:
            raise DimensionMismatch("matrix column count != dim")
        c = la.vec(c) if c is not None else tuple(ZERO for _ in range(out_dim))
        if self.is_empty:
            return ConvexPolyhedron.empty(out_dim)
        verts = [la.add(la.matvec(M, v), c) for v in self.vertices]
        rays = [la.matvec(M, r) for r in self.rays]
        lin = [la.matvec(M, l) for l in self.lineality]
        rays = [r for r in rays if not la.is_zero(r)]
        lin = [l for l in lin if not la.is_zero(l)]
        return ConvexPolyhedron.from_vrep(verts, rays, lin, dim=out_dim)

    def minkowski_sum(self, other: "ConvexPolyhedron") -> "ConvexPolyhedron":
        if self.dim != other.dim:
            raise DimensionMismatch("ambient dimensions differ")
        if self.is_empty or other.is_empty:
            return ConvexPolyhedron.empty(self.dim)
        verts = [la.add(v, w) for v in self.vertices for w in other.vertices]
        rays = self.rays + other.rays
        lin = self.lineality + other.lineality
        return ConvexPolyhedron.from_vrep(verts, rays, lin, dim=self.dim)

    def translate(self, c) -> "ConvexPolyhedron":
        return self.affine_image(la.identity(self.dim), c)

    def polar_cone(self) -> "ConvexPolyhedron":
        """{v : <v, z> <= 0 for all z in K}; K must be a cone."""
        if self.is_empty:
            return ConvexPolyhedron.full_space(self.dim)
        if not self.is_cone():
            raise NotACone("polar requires a cone (origin the only vertex)")
        ineq = self.rays
        eq = self.lineality
        return ConvexPolyhedron.from_hrep(
            ineq, [ZERO] * len(ineq), eq, [ZERO] * len(eq), dim=self.dim)

    def recession_cone(self) -> "ConvexPolyhedron":
        if self.is_empty:
            return ConvexPolyhedron.empty(self.dim)
        return ConvexPolyhedron.cone_from_generators(self.rays, self.lineality, dim=self.dim)

    def tangent_cone_at(self, z) -> "ConvexPolyhedron":
        """Cone of feasible directions at a member point (polyhedral tangent)."""
        z = la.vec(z)
        if not self.contains(z):
            return ConvexPolyhedron.empty(self.dim)
        act = [row for row, rhs in zip(self.A, self.b) if la.dot(row, z) == rhs]
        return ConvexPolyhedron.from_hrep(
            act, [ZERO] * len(act), self.C, [ZERO] * len(self.C), dim=self.dim)

    # -- faces -----------------------------------------------------------

    def faces(self, budget: int = DEFAULT_FACE_BUDGET) -> list["FaceDescriptor"]:
        """All nonempty faces including the polyhedron itself."""
        if self.is_empty:
            return []
        n_ineq = len(self.A)
        out: list[FaceDescriptor] = []
        seen: set[frozenset[int]] = set()
        queue: list[frozenset[int]] = [frozenset()]
        visited_raw: set[frozenset[int]] = {frozenset()}
        nodes = 0
        while queue:
            active = queue.pop()
            nodes += 1
            if nodes > budget:
                raise ScaleExceeded("face lattice exceeds node budget")
            sub = self._face_polyhedron(active)
            if sub.is_empty:
                continue
            rip = sub.relative_interior_point()
            maximal = frozenset(i for i in range(n_ineq)
                                if la.dot(self.A[i], rip) == self.b[i])
            if maximal not in seen:
                seen.add(maximal)
                out.append(FaceDescriptor(
                    active_inequality_indices=maximal,
                    affine_hull_dim=sub.affine_dim(),
                    relative_interior_point=rip,
                    polyhedron=sub))
            for i in range(n_ineq):
                if i in maximal:
                    continue
                nxt = frozenset(maximal | {i})
                if nxt not in visited_raw:
                    visited_raw.add(nxt)
                    queue.append(nxt)
        out.sort(key=lambda f: (-f.affine_hull_dim, sorted(f.active_inequality_indices)))
        return out

    def _face_polyhedron(self, active: frozenset[int]) -> "ConvexPolyhedron":
        extraC = tuple(self.A[i] for i in sorted(active))
        extraD = tuple(self.b[i] for i in sorted(active))
        return ConvexPolyhedron.from_hrep(self.A, self.b, self.C + extraC,
                                          self.d + extraD, dim=self.dim)

    # -- projection --------------------------------------------------------

    def project_point(self, z) -> la.Vec | None:
        """Nearest point of the piece to z (exact); None when empty."""
        if self.is_empty:
            return None
        z = la.vec(z)
        if len(z) != self.dim:
            raise DimensionMismatch("point dimension mismatch")
        if self.contains(z):
            return z
        best: la.Vec | None = None
        best_d2: Fraction | None = None
        for face in self.faces():
            rows = self.C + tuple(self.A[i] for i in sorted(face.active_inequality_indices))
            rhs = self.d + tuple(self.b[i] for i in sorted(face.active_inequality_indices))
            if not rows:
                continue
            cand = la.project_onto_affine(rows, rhs, z)
            if cand is None or not self.contains(cand):
                continue
            d2 = la.norm_sq(la.sub(cand, z))
            if best_d2 is None or d2 < best_d2:
                best, best_d2 = cand, d2
        assert best is not None
        return best

    def distance(self, z) -> float:
        """Euclidean distance, +inf for the empty set."""
        p = self.project_point(z)
        if p is None:
            return float("inf")
        return la.sqrt_fraction(la.norm_sq(la.sub(p, la.vec(z))))

    # -- presentation -------------------------------------------------------

    def vrep_float(self) -> dict:
        return {
            "vertices": [la.vec_float(v) for v in self.vertices],
            "rays": [la.vec_float(_unitize(r)) for r in self.rays],
            "lineality": [la.vec_float(_unitize(l)) for l in self.lineality],
        }

    def hrep_float(self) -> dict:
        """Float H-rep with rows scaled to unit norm (solver-friendly)."""

        def norm_rows(rows, rhs):
            out_r, out_v = [], []
            for row, v in zip(rows, rhs):
                fr = la.vec_float(row)
                s = sum(x * x for x in fr) ** 0.5 or 1.0
                out_r.append([x / s for x in fr])
                out_v.append(float(v) / s)
            return out_r, out_v

        A, b = norm_rows(self.A, self.b)
        C, d = norm_rows(self.C, self.d)
        return {"A": A, "b": b, "C": C, "d": d}

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.is_empty:
            return f"ConvexPolyhedron.empty({self.dim})"
        return (f"ConvexPolyhedron(dim={self.dim}, |A|={len(self.A)}, |C|={len(self.C)}, "
                f"V={len(self.vertices)}, R={len(self.rays)}, L={len(self.lineality)})")


@dataclass(frozen=True)
class FaceDescriptor:
    active_inequality_indices: frozenset[int]
    affine_hull_dim: int
    relative_interior_point: la.Vec
    polyhedron: ConvexPolyhedron


# -- conversion internals ----------------------------------------------------


def _hrep_to_vrep(A, b, C, d, n):
    """Returns (vertices, rays, lineality) or None when infeasible."""
    ineqs = [tuple(row) + (-rhs,) for row, rhs in zip(A, b)]
    ineqs.append(tuple(ZERO for _ in range(n)) + (-ONE,))  # t >= 0
    eqs = [tuple(row) + (-rhs,) for row, rhs in zip(C, d)]
    rays_h, lin_h = dd_cone(tuple(ineqs), tuple(eqs), n + 1)
    verts, rays, lin = [], [], []
    for g in rays_h:
        t = g[n]
        if t > 0:
            verts.append(tuple(x / t for x in g[:n]))
        else:
            rays.append(la.primitive(g[:n]))
    for g in lin_h:
        # lineality of the homogenization has t = 0 (t >= 0 forces it)
        assert g[n] == 0
        lin.append(la.canon_sign(g[:n]))
    if not verts:
        return None
    rays = [r for r in rays if not la.is_zero(r)]
    lin = [l for l in lin if not la.is_zero(l)]
    return tuple(sorted(set(verts))), tuple(sorted(set(rays))), tuple(sorted(set(lin)))


def _vrep_to_hrep(verts, rays, lin, n):
    """Minimal H-description via the polar of the homogenization cone."""
    gens = [tuple(v) + (ONE,) for v in verts]
    gens += [tuple(r) + (ZERO,) for r in rays]
    lins = [tuple(l) + (ZERO,) for l in lin]
    # polar of the homogenization cone, described by inequalities, then DD
    rays_p, lin_p = dd_cone(tuple(gens), tuple(lins), n + 1)
    A, b = _rescale_rows(rays_p, n)
    C, d = _rescale_rows(lin_p, n, sign_canon=True)
    # drop inequality facets of the homogenization cone that are vacuous on
    # the affine hull after fixing t = 1 (their normals lie in rowspan(C))
    if C:
        keep = []
        ct = la.transpose(tuple(C))
        for i, row in enumerate(A):
            lam = la.solve(ct, row)
            if lam is not None and la.dot(lam, tuple(d)) <= b[i]:
                continue
            keep.append(i)
        A = [A[i] for i in keep]
        b = [b[i] for i in keep]
    order = sorted(range(len(A)), key=lambda i: (A[i], b[i]))
    A = tuple(A[i] for i in order)
    b = tuple(b[i] for i in order)
    order = sorted(range(len(C)), key=lambda i: (C[i], d[i]))
    C = tuple(C[i] for i in order)
    d = tuple(d[i] for i in order)
    return A, b, C, d


def _rescale_rows(gen_rows, n, sign_canon=False):
    rows, rhs = [], []
    for g in gen_rows:
        full = la.canon_sign(g) if sign_canon else la.primitive(g)
        a, beta = full[:n], full[n]
        if la.is_zero(a):
            continue
        rows.append(a)
        rhs.append(-beta)
    return rows, rhs


def _row_scale(row) -> Fraction:
    s = max((abs(x) for x in row), default=ZERO)
    return s if s > 1 else ONE


def _unitize(v: la.Vec) -> list[float]:
    import math

    fv = [float(x) for x in v]
    nrm = math.sqrt(sum(x * x for x in fv))
    if nrm == 0:
        return fv
    return [x / nrm for x in fv]


# -- union containment via arrangement refinement -----------------------------


def refine_by_hyperplanes(piece: ConvexPolyhedron, hyperplanes) -> list[ConvexPolyhedron]:
    """Split a piece by homogeneous/affine rows (row, rhs) into covering cells.

    Every returned cell lies on one closed side of each hyperplane, so any
    sign-determined predicate is constant on cell relative interiors.
    """
    cells = [piece]
    for row, rhs in hyperplanes:
        row = la.vec(row)
        rhs = la.frac(rhs)
        nxt: list[ConvexPolyhedron] = []
        for cell in cells:
            vals = [la.dot(row, v) - rhs for v in cell.vertices]
            vals += [la.dot(row, r) for r in cell.rays]
            vals += [la.dot(row, l) for l in cell.lineality]
            vals += [-la.dot(row, l) for l in cell.lineality]
            if all(v <= 0 for v in vals):
                nxt.append(cell)
                continue
            if all(v >= 0 for v in vals):
                nxt.append(cell)
                continue
            lo = cell.intersect(ConvexPolyhedron.from_hrep([row], [rhs], dim=cell.dim))
            hi = cell.intersect(ConvexPolyhedron.from_hrep([la.neg(row)], [-rhs], dim=cell.dim))
            for part in (lo, hi):
                if not part.is_empty:
                    nxt.append(part)
        cells = nxt
    return cells


def union_contains(cover_pieces, target_pieces) -> tuple[bool, la.Vec | None]:
    """Exact test that union(target) is a subset of union(cover).

    Refines each target piece by every bounding hyperplane of the cover;
    each refined cell must land inside a single convex cover piece.  On
    failure, returns a witness point of target \\ cover.
    """
    cover = [p for p in cover_pieces if not p.is_empty]
    target = [p for p in target_pieces if not p.is_empty]
    if not target:
        return True, None
    if not cover:
        return False, target[0].relative_interior_point()
    hyps = []
    seen = set()
    for q in cover:
        for row, rhs in list(zip(q.A, q.b)) + list(zip(q.C, q.d)):
            key = la.primitive(tuple(row) + (rhs,))
            if key not in seen and not la.is_zero(row):
                seen.add(key)
                hyps.append((row, rhs))
    for p in target:
        for cell in refine_by_hyperplanes(p, hyps):
            if not any(q.contains_set(cell) for q in cover):
                return False, cell.relative_interior_point()
    return True, None


# -- module-level operation wrappers (spec surface) ---------------------------


def dd_convert(p: ConvexPolyhedron) -> ConvexPolyhedron:
    """Both representations are kept canonical on construction; returns p."""
    return p


def intersect(p: ConvexPolyhedron, q: ConvexPolyhedron) -> ConvexPolyhedron:
    return p.intersect(q)


def polar_cone(k: ConvexPolyhedron) -> ConvexPolyhedron:
    return k.polar_cone()


def affine_image(p: ConvexPolyhedron, M, c=None) -> ConvexPolyhedron:
    return p.affine_image(M, c)


def minkowski_sum(p: ConvexPolyhedron, q: ConvexPolyhedron) -> ConvexPolyhedron:
    return p.minkowski_sum(q)


def faces(p: ConvexPolyhedron, budget: int = DEFAULT_FACE_BUDGET):
    return p.faces(budget)


def project_point(p: ConvexPolyhedron, z):
    return p.project_point(z)
