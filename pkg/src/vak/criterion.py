"""Outer norms, the generalized criterion for relative Lipschitz stability,
the five-way equivalence battery, inequality scans, and the brute-force
sampling oracle for the graphical modulus.

The outer norm of a positively homogeneous map with graph pieces
cone{(y_j, x_j)} is computed exactly up to eigensolver precision:
finiteness is a polyhedral question (a ray with zero input block), and the
finite value is the maximum over generator support sets of the generalized
Rayleigh quotient  max |sum l_j x_j|^2  s.t.  |sum l_j y_j|^2 = 1, l >= 0,
solved per support as a symmetric pencil with a positivity check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _linalg as la
from .cones import ConeUnion, project_cone_union
from .errors import ScaleExceeded, UnsupportedRestrictionSet
from .geometry import ConvexPolyhedron
from .manifold import ManifoldChart
from .maps import (PolyMap, PosHomMap, SmoothGraphMap, coderivative,
                   graph_to_normal_pairs, regular_coderivative)
from .projcode import (ProjCodeResult, SampleBudget,
                       projcode_manifold_fixed_point, projcode_polyhedral,
                       projcode_sampled)
from .sets import (FiniteUnionSet, local_cone_model, localization_radius,
                   strata_representatives, tangent_cone_at)

ZERO = la.ZERO
SUPPORT_BUDGET = 14
INF = float("inf")


@dataclass
class OuterNormResult:
    finite: bool
    value: float
    witness: tuple | None
    method: str

    def to_json(self) -> dict:
        return {"finite": self.finite,
                "value": None if not self.finite else self.value,
                "witness": self.witness, "method": self.method}


@dataclass
class CriterionReport:
    lipschitz_like: bool
    modulus: float
    checks: dict = field(default_factory=dict)
    oracle_estimate: float | None = None
    witnesses: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    route: str = ""
    projcode: ProjCodeResult | None = None

    def battery_consistent(self) -> bool:
        vals = [v for v in self.checks.values()]
        return len(set(vals)) <= 1

    def to_json(self) -> dict:
        return {"lipschitz_like": self.lipschitz_like, "modulus": self.modulus,
                "checks": dict(self.checks),
                "oracle_estimate": self.oracle_estimate,
                "witnesses": self.witnesses, "warnings": list(self.warnings),
                "route": self.route}


# ----------------------------------------------------------------- outer norm


def outer_norm(h: PosHomMap) -> OuterNormResult:
    mi, no = h.input_dim, h.output_dim
    # finiteness: a nonzero output over zero input must not exist
    zero_slice = h.value_at_zero()
    if not (zero_slice.is_empty_union() or zero_slice.is_zero()):
        witness_ray = None
        for g in zero_slice.generators():
            if not la.is_zero(g):
                witness_ray = (0.0,) * mi + tuple(float(x) for x in g)
                break
        return OuterNormResult(False, INF, witness_ray, "eigen-active-set")

    best = 0.0
    witness = None
    for piece in h.graph.pieces:
        gens = list(piece.rays) + list(piece.lineality) + \
            [la.neg(l) for l in piece.lineality]
        gens = [g for g in gens if not la.is_zero(g)]
        if not gens:
            continue
        if len(gens) > SUPPORT_BUDGET:
            raise ScaleExceeded(
                f"outer norm support enumeration over {len(gens)} generators")
        g_unit = []
        for g in gens:
            v = np.array(la.vec_float(g))
            g_unit.append(v / np.linalg.norm(v))
        ys = np.array([v[:mi] for v in g_unit])
        xs = np.array([v[mi:] for v in g_unit])
        a_full = xs @ xs.T
        b_full = ys @ ys.T
        for size in range(1, len(gens) + 1):
            for sup in itertools.combinations(range(len(gens)), size):
                idx = list(sup)
                val, lam = _support_max(a_full[np.ix_(idx, idx)],
                                        b_full[np.ix_(idx, idx)])
                if val is None or val <= best:
                    continue
                best = val
                wy = lam @ ys[idx]
                wx = lam @ xs[idx]
                scale = np.linalg.norm(wy)
                witness = tuple(float(v) for v in np.concatenate([wy, wx]) / scale)
    return OuterNormResult(True, best, witness, "eigen-active-set")


def _support_max(a: np.ndarray, b: np.ndarray):
    """Max of sqrt(l'Al / l'Bl) over l >= 0 on one support, or None."""
    k = a.shape[0]
    if k == 1:
        if b[0, 0] <= 1e-18:
            return None, None  # zero input direction carries no finite value
        return math.sqrt(max(a[0, 0], 0.0) / b[0, 0]), np.ones(1)
    try:
        mu, vecs = scipy.linalg.eig(a, b)
    except (ValueError, np.linalg.LinAlgError):
        return None, None
    best, best_lam = None, None
    for j in range(len(mu)):
        m = mu[j]
        if not np.isfinite(m.real) or abs(m.imag) > 1e-9 or m.real < -1e-12:
            continue
        lam = vecs[:, j].real
        nrm = np.max(np.abs(lam))
        if nrm < 1e-14:
            continue
        lam = lam / nrm
        if np.min(lam) < -1e-9:
            lam = -lam
        if np.min(lam) < -1e-9:
            continue  # not realizable with nonnegative weights
        denom = float(lam @ b @ lam)
        if denom <= 1e-16:
            continue
        val = math.sqrt(max(float(lam @ a @ lam), 0.0) / denom)
        if best is None or val > best:
            best, best_lam = val, lam
    if best is None:
        return None, None
    return best, best_lam


def outer_norm_sampled_lower_bound(h: PosHomMap, samples: int = 10_000,
                                   seed: int = 0) -> float:
    """Monte-Carlo lower bound: max |x| over unit-|y| conic combinations."""
    rng = np.random.default_rng(seed)
    mi = h.input_dim
    best = 0.0
    for piece in h.graph.pieces:
        gens = [np.array(la.vec_float(g)) for g in
                list(piece.rays) + list(piece.lineality)
                + [la.neg(l) for l in piece.lineality]]
        gens = [g / np.linalg.norm(g) for g in gens if np.linalg.norm(g) > 0]
        if not gens:
            continue
        w = rng.exponential(1.0, size=(max(1, samples // max(1, len(h.graph.pieces))),
                                       len(gens)))
        pts = w @ np.array(gens)
        ny = np.linalg.norm(pts[:, :mi], axis=1)
        nx = np.linalg.norm(pts[:, mi:], axis=1)
        keep = ny > 1e-12
        if np.any(keep):
            best = max(best, float(np.max(nx[keep] / ny[keep])))
    return best


# ------------------------------------------------------------- the criterion


def glm_criterion(s, x_set: FiniteUnionSet | None, xbar, ubar,
                  route: str = "auto", chart: ManifoldChart | None = None,
                  budget: SampleBudget = SampleBudget()) -> CriterionReport:
    """Relative Lipschitz-likeness via the zero-slice of the projectional
    coderivative, with the outer norm as the graphical modulus."""
    warnings = []
    if x_set is not None and not x_set.is_convex_representable() and chart is None:
        warnings.append(
            "restriction set is a nonconvex polyhedral union; the criterion "
            "equivalences assume a closed convex set or a smooth manifold")
    pc = _dispatch_projcode(s, x_set, xbar, ubar, route, chart, budget)
    warnings.extend(pc.warnings)
    zero_out = pc.map.value_at_zero()
    lipschitz = zero_out.is_empty_union() or zero_out.is_zero()
    norm = outer_norm(pc.map)
    witnesses = {}
    if not lipschitz:
        witnesses["nonzero_output_at_zero"] = [
            [float(v) for v in g] for g in zero_out.generators()][:4]
    if norm.witness is not None:
        witnesses["outer_norm_witness"] = list(norm.witness)
    modulus = norm.value if norm.finite else INF
    return CriterionReport(lipschitz_like=lipschitz, modulus=modulus,
                           witnesses=witnesses, warnings=warnings,
                           route=pc.route, projcode=pc)


def _dispatch_projcode(s, x_set, xbar, ubar, route, chart, budget) -> ProjCodeResult:
    if route == "auto":
        if isinstance(s, SmoothGraphMap):
            route = "sampled"
        elif chart is not None and not chart.is_affine():
            route = "sampled"
        elif chart is not None:
            route = "manifold"
        else:
            route = "polyhedral"
    if route == "polyhedral":
        if x_set is None and chart is not None:
            x_set = chart.polyhedral_set()
        if x_set is None:
            raise UnsupportedRestrictionSet("polyhedral route needs a polyhedral X")
        return projcode_polyhedral(s, x_set, xbar, ubar)
    if route == "manifold":
        if chart is None:
            raise UnsupportedRestrictionSet("manifold route needs a chart")
        return projcode_manifold_fixed_point(s, chart, xbar, ubar)
    if route == "sampled":
        if x_set is None and chart is not None and chart.is_affine():
            x_set = chart.polyhedral_set()
        if x_set is None:
            raise UnsupportedRestrictionSet("sampled route needs a polyhedral X")
        return projcode_sampled(s, x_set, xbar, ubar, budget)
    raise ValueError(f"unknown route {route!r}")


# ------------------------------------------------------- equivalence battery


def equivalence_battery(s: PolyMap, x_set: FiniteUnionSet, xbar, ubar) -> CriterionReport:
    """Five independent computations of the stability test on affine data.

    (b) projected zero-slice trivial; (c) projected map has finite outer
    norm; (d) zero-slice meets the tangent space trivially; (e) zero-slice
    equals the normal space; (f) the projectional coderivative's zero-slice
    is trivial (computed by the exact outer-limit route, not via (b)).
    """
    n = s.n
    xb = la.vec(xbar)
    piece = x_set.pieces[0]
    if any(p.A for p in x_set.pieces) or len(x_set.pieces) != 1:
        raise UnsupportedRestrictionSet("battery expects an affine restriction set")
    t_sub = piece.tangent_cone_at(xb)
    n_sub = t_sub.polar_cone()

    sx = s.restrict(x_set)
    dsx = coderivative(sx, xbar, ubar)
    zero_slice = dsx.value_at_zero()          # cone union of x* at u* = 0

    # (b) proj_T of the zero-slice
    if zero_slice.is_empty_union():
        b_ok = True
    else:
        proj_slice = project_cone_union(t_sub, zero_slice, trailing=0)
        b_ok = proj_slice.is_zero() or proj_slice.is_empty_union()

    # (c) outer norm of the projected map (exact affine projector)
    proj_rows = la.projector_onto_span(t_sub.lineality, n) if t_sub.lineality \
        else tuple(tuple(ZERO for _ in range(n)) for _ in range(n))
    m_in = dsx.input_dim
    block = []
    for i in range(m_in):
        block.append(tuple(la.ONE if j == i else ZERO for j in range(m_in + n)))
    for i in range(n):
        block.append(tuple((ZERO,) * m_in) + tuple(proj_rows[i]))
    projected_map = PosHomMap(m_in, n, dsx.graph.affine_image(block, out_dim=m_in + n))
    c_norm = outer_norm(projected_map)
    c_ok = c_norm.finite

    # (d) zero-slice n tangent subspace
    if zero_slice.is_empty_union():
        d_ok = True
    else:
        inter = ConeUnion.from_pieces(
            [p.intersect(t_sub) for p in zero_slice.pieces], dim=n)
        d_ok = inter.is_zero() or inter.is_empty_union()

    # (e) zero-slice equals the normal space
    from .cones import cone_union_equal

    e_ok, _ = cone_union_equal(
        zero_slice if not zero_slice.is_empty_union() else ConeUnion.zero(n),
        ConeUnion.from_pieces([n_sub], dim=n))

    # (f) projectional coderivative zero-slice, via the outer-limit route
    pc = projcode_polyhedral(s, x_set, xbar, ubar)
    zf = pc.map.value_at_zero()
    f_ok = zf.is_empty_union() or zf.is_zero()

    checks = {"b": b_ok, "c": c_ok, "d": d_ok, "e": e_ok, "f": f_ok}
    return CriterionReport(
        lipschitz_like=f_ok,
        modulus=c_norm.value if c_norm.finite else INF,
        checks=checks, route="battery",
        witnesses={"outer_norm_witness": list(c_norm.witness) if c_norm.witness else None},
        projcode=pc)


# --------------------------------------------------------- inequality scan


def modulus_inequality_scan(s: PolyMap, x_set: FiniteUnionSet, xbar, ubar,
                            kappa: float, radius: float | None = None) -> dict:
    """Checks |proj_T(x*)| <= kappa |u*| on generator rays of the regular
    coderivative graph at local-complex representatives around the point."""
    n, m = s.n, s.m
    sx = s.restrict(x_set)
    zbar = tuple(la.vec(xbar)) + tuple(la.vec(ubar))
    k_local = local_cone_model(sx.graph, zbar)
    x_local = local_cone_model(x_set, la.vec(xbar))
    lifted = [tuple(row) + (ZERO,) * m for p in x_local.pieces for row in p.A + p.C]
    reps = strata_representatives(k_local, extra_hyperplanes=lifted)
    eps = localization_radius(sx.graph, zbar)
    if radius is not None:
        eps = min(eps, la.frac(radius))
    x_local_set = FiniteUnionSet.from_pieces(list(x_local.pieces), dim=n)

    violations = []
    points_checked = 0
    for zeta in reps:
        scale = sum(abs(v) for v in zeta)
        shift = la.scale(zeta, eps / (1 + scale))
        point = tuple(a + b for a, b in zip(zbar, shift))
        if not sx.graph.contains(point):
            continue
        points_checked += 1
        d_reg = regular_coderivative(sx, point[:n], point[n:])
        t_here = tangent_cone_at(x_local_set, zeta[:n])
        if len(t_here.pieces) != 1:
            continue
        projected = project_cone_union(t_here.pieces[0],
                                       graph_to_normal_pairs(d_reg.graph, m, n),
                                       trailing=m)
        for g in projected.generators():
            gp = np.array(la.vec_float(g))
            x_part, q_part = gp[:n], gp[n:]
            lhs = np.linalg.norm(x_part)
            rhs = kappa * np.linalg.norm(q_part)
            if lhs > rhs + 1e-9 * max(1.0, rhs):
                violations.append({
                    "point": [float(v) for v in point],
                    "ray": [float(v) for v in gp],
                    "lhs": lhs, "rhs": rhs})
    return {"kappa": kappa, "points_checked": points_checked,
            "violations": violations, "holds": not violations}


# ----------------------------------------------------------------- lip oracle


def lip_oracle(s: PolyMap, x_set: FiniteUnionSet, xbar, ubar,
               rho: float, sigma: float, pairs: int = 10_000,
               seed: int = 0) -> dict:
    """Sampled lower estimate of the graphical modulus from the definition.

    Draws x, x' in X within rho of xbar, samples u' in S(x') within sigma
    of ubar, and maximizes d(u', S(x)) / |x' - x|.
    """
    rng = np.random.default_rng(seed)
    n, m = s.n, s.m
    xb = np.array([float(v) for v in la.vec(xbar)])
    ub = np.array([float(v) for v in la.vec(ubar)])

    x_samples = _sample_set_near(x_set, xb, rho, rng, max(60, pairs // 40))
    if len(x_samples) < 2:
        return {"estimate": 0.0, "pairs_used": 0, "empty_slices": 0}

    slice_cache: dict[int, tuple] = {}

    def slice_at(i):
        if i not in slice_cache:
            val = s.evaluate(tuple(map(float, x_samples[i])))
            dist = _SliceDistance(val) if not val.is_empty_set() else None
            pts = (_sample_set_near(val, ub, sigma, rng, 12)
                   if not val.is_empty_set() else [])
            slice_cache[i] = (val, dist, pts)
        return slice_cache[i]

    best = 0.0
    used = 0
    empty = 0
    attempts = 0
    while used < pairs and attempts < pairs * 3:
        attempts += 1
        i, j = rng.integers(0, len(x_samples), size=2)
        dx = np.linalg.norm(x_samples[i] - x_samples[j])
        if dx < 1e-12:
            continue
        _, dist_i, _ = slice_at(int(i))
        _, _, pts_j = slice_at(int(j))
        if dist_i is None or not pts_j:
            empty += 1
            continue
        for u in pts_j:
            used += 1
            d = dist_i.distance(u)
            if d / dx > best:
                best = d / dx
    return {"estimate": best, "pairs_used": used, "empty_slices": empty}


def lip_oracle_smooth(s: SmoothGraphMap, x_set: FiniteUnionSet, xbar, ubar,
                      rho: float, sigma: float, pairs: int = 10_000,
                      seed: int = 0) -> dict:
    """Definition-based modulus estimate for scalar-output smooth graphs.

    Distances to the slice S(x) = {u : h_i(x, u) <= 0} are found by a
    feasibility bisection in the single output coordinate.
    """
    from .errors import DimensionMismatch

    if s.m != 1:
        raise DimensionMismatch("smooth oracle supports m = 1 only")
    rng = np.random.default_rng(seed)
    xb = np.array([float(v) for v in la.vec(xbar)])
    ub = float(la.vec(ubar)[0])
    x_samples = _sample_set_near(x_set, xb, rho, rng, max(60, pairs // 40))

    def feasible(x, u):
        return bool(np.all(s.values(np.concatenate([x, [u]])) <= 1e-12))

    def slice_distance(x, u):
        if feasible(x, u):
            return 0.0
        step = max(sigma, 1.0) / 8
        for sgn in (1.0, -1.0):
            t = step
            while t <= 8 * max(sigma, 1.0):
                if feasible(x, u + sgn * t):
                    lo, hi = 0.0, t
                    for _ in range(60):
                        mid = (lo + hi) / 2
                        if feasible(x, u + sgn * mid):
                            hi = mid
                        else:
                            lo = mid
                    return hi
                t *= 2
        return math.inf

    best = 0.0
    used = 0
    empty = 0
    attempts = 0
    while used < pairs and attempts < pairs * 3:
        attempts += 1
        i, j = rng.integers(0, len(x_samples), size=2)
        dx = np.linalg.norm(x_samples[i] - x_samples[j])
        if dx < 1e-12:
            continue
        u_prime = ub + float(rng.uniform(-sigma, sigma))
        if not feasible(x_samples[j], u_prime):
            empty += 1
            continue
        used += 1
        d = slice_distance(x_samples[i], u_prime)
        if np.isfinite(d) and d / dx > best:
            best = d / dx
    return {"estimate": best, "pairs_used": used, "empty_slices": empty}


def _sample_set_near(fset: FiniteUnionSet, center: np.ndarray, radius: float,
                     rng, count: int):
    """Members of the union within the ball, by bounded piece sampling."""
    dim = fset.dim
    box_rows = []
    box_rhs = []
    for i in range(dim):
        e = [0.0] * dim
        e[i] = 1.0
        box_rows.append(list(e))
        box_rhs.append(float(center[i]) + radius)
        box_rows.append([-v for v in e])
        box_rhs.append(-float(center[i]) + radius)
    box = ConvexPolyhedron.from_hrep(box_rows, box_rhs, dim=dim)
    out = []
    for piece in fset.pieces:
        bounded = piece.intersect(box)
        if bounded.is_empty:
            continue
        verts = [np.array(la.vec_float(v)) for v in bounded.vertices]
        if not verts:
            continue
        for _ in range(max(1, count // len(fset.pieces))):
            w = rng.dirichlet(np.ones(len(verts)) * 0.6)
            p = np.asarray(sum(wi * v for wi, v in zip(w, verts)))
            if np.linalg.norm(p - center) <= radius + 1e-12:
                out.append(p)
        for v in verts:
            if np.linalg.norm(v - center) <= radius + 1e-12:
                out.append(v)
    return out


class _SliceDistance:
    """Fast float distance to a fixed finite union (per-face projectors)."""

    def __init__(self, fset: FiniteUnionSet):
        self.dim = fset.dim
        self._pieces = []
        for piece in fset.pieces:
            hf = piece.hrep_float()
            A = np.array(hf["A"], dtype=float).reshape(len(hf["A"]), self.dim)
            b = np.array(hf["b"], dtype=float)
            C = np.array(hf["C"], dtype=float).reshape(len(hf["C"]), self.dim)
            d = np.array(hf["d"], dtype=float)
            systems = []
            for face in piece.faces():
                rows = list(C) + [A[i] for i in sorted(face.active_inequality_indices)]
                rhs = list(d) + [b[i] for i in sorted(face.active_inequality_indices)]
                if not rows:
                    continue
                e = np.array(rows)
                f = np.array(rhs)
                g = e @ e.T
                try:
                    ginv = np.linalg.pinv(g)
                except np.linalg.LinAlgError:
                    continue
                systems.append((e, f, ginv))
            self._pieces.append((A, b, C, d, systems))

    def distance(self, z: np.ndarray) -> float:
        best = INF
        for A, b, C, d, systems in self._pieces:
            ok = True
            if len(A) and np.max(A @ z - b) > 1e-9:
                ok = False
            if ok and len(C) and np.max(np.abs(C @ z - d)) > 1e-9:
                ok = False
            if ok:
                return 0.0
            for e, f, ginv in systems:
                y = z - e.T @ (ginv @ (e @ z - f))
                if len(A) and np.max(A @ y - b) > 1e-8:
                    continue
                if len(C) and np.max(np.abs(C @ y - d)) > 1e-8:
                    continue
                best = min(best, float(np.linalg.norm(y - z)))
        return best
