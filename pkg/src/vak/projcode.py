"""Projectional coderivatives by three routes.

The defining outer limit (projected limiting normal cones of the restricted
graph, followed along graph points approaching the reference pair) is
computed

* exactly for polyhedral data, by stratifying the local cone complex of
  gph S|_X and projecting the limiting normal cone of every stratum onto
  the tangent cone of X at that stratum,
* through the fixed-point identities available on smooth manifolds
  (projection form and intersection form, asserted equal),
* by an annulus-sampling estimator for curved graphs: certified limit
  directions only, completeness best effort.

All internal work happens in normal coordinates (p, q), where a normal
element of the graph is (p, q) = (x*, -u*); the positively homogeneous
result map stores graph pairs (u*, x*) = (-q, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .cones import ConeProjector, ConeUnion, cone_union_equal, project_cone_union
from .errors import (FormsDisagree, InsufficientSamples, PointNotOnGraph,
                     UnsupportedRestrictionSet)
from .geometry import ConvexPolyhedron
from .manifold import ManifoldChart, parse_expr
from .maps import (PolyMap, PosHomMap, SmoothGraphMap, coderivative,
                   graph_to_normal_pairs, normal_pairs_to_graph,
                   swapped_normal_presentation)
from .sets import (FiniteUnionSet, limiting_normal_cone_at, local_cone_model,
                   strata_representatives, tangent_cone_at)

ZERO = la.ZERO
ON_GRAPH_TOL = 1e-8


@dataclass
class ProjCodeResult:
    map: PosHomMap
    route: str
    limsup: ConeUnion  # normal coordinates (p, q)
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def presentation(self) -> ConeUnion:
        """Swapped normal pairs (q, p): the usual drawing orientation."""
        n = self.map.output_dim
        m = self.map.input_dim
        return swapped_normal_presentation(self.limsup, n, m)

    def to_json(self) -> dict:
        return {
            "route": self.route,
            "graph": self.map.graph.to_json(),
            "limsup_normal_pairs": self.limsup.to_json(),
            "swapped_presentation": self.presentation().to_json(),
            "diagnostics": self.diagnostics,
            "warnings": list(self.warnings),
        }


def _require_on_graph(s: PolyMap, xbar, ubar):
    pt = tuple(la.vec(xbar)) + tuple(la.vec(ubar))
    if not s.graph.contains(pt, 0):
        if not s.graph.contains(pt, ON_GRAPH_TOL):
            raise PointNotOnGraph("reference pair is not on the graph")
    return pt


def _tangent_piece_of_union(t: ConeUnion) -> ConvexPolyhedron:
    if len(t.pieces) != 1:
        raise UnsupportedRestrictionSet(
            "tangent cone of the restriction set is not convex here; the "
            "exact projectional route needs a convex projection target")
    return t.pieces[0]


# ------------------------------------------------------- exact polyhedral


def projcode_polyhedral(s: PolyMap, x_set: FiniteUnionSet, xbar, ubar,
                        budget: int = 20_000) -> ProjCodeResult:
    """Exact outer limit for a polyhedral map restricted to a polyhedral set."""
    n, m = s.n, s.m
    if x_set.dim != n:
        raise PointNotOnGraph("restriction set dimension mismatch")
    sx = s.restrict(x_set)
    zbar = _require_on_graph(sx, xbar, ubar)
    xb = la.vec(xbar)

    graph_local = local_cone_model(sx.graph, zbar)      # cones in R^{n+m}
    x_local = local_cone_model(x_set, xb)               # cones in R^n
    lifted_x_rows = []
    for p in x_local.pieces:
        for row in p.A + p.C:
            lifted_x_rows.append(tuple(row) + (ZERO,) * m)

    reps = strata_representatives(graph_local, extra_hyperplanes=lifted_x_rows,
                                  budget=budget)
    local_set = FiniteUnionSet.from_pieces(list(graph_local.pieces), dim=n + m) \
        if graph_local.pieces else FiniteUnionSet.empty(n + m)
    x_local_set = FiniteUnionSet.from_pieces(list(x_local.pieces), dim=n) \
        if x_local.pieces else FiniteUnionSet.empty(n)

    pieces = []
    for zeta in reps:
        ncone = limiting_normal_cone_at(local_set, zeta, budget=budget)
        if ncone.is_empty_union():
            continue
        t_here = tangent_cone_at(x_local_set, zeta[:n])
        t_piece = _tangent_piece_of_union(t_here)
        img = project_cone_union(t_piece, ncone, trailing=m)
        pieces.extend(img.pieces)
    limsup = ConeUnion.from_pieces(pieces, dim=n + m) if pieces \
        else ConeUnion.empty(n + m)
    hmap = PosHomMap(m, n, normal_pairs_to_graph(limsup, n, m))
    return ProjCodeResult(hmap, "exact-polyhedral", limsup,
                          diagnostics={"strata": len(reps)})


# ------------------------------------------------- manifold fixed point


def projcode_manifold_fixed_point(s: PolyMap, chart: ManifoldChart, xbar, ubar,
                                  restricted_coderivative: PosHomMap | None = None
                                  ) -> ProjCodeResult:
    """Fixed-point route: project D*S|_X at the point, check the
    intersection form, and assert the two agree."""
    n, m = s.n, s.m
    xb = la.vec(xbar)
    if not chart.on_manifold([float(v) for v in xb]):
        raise PointNotOnGraph("reference point is off the manifold chart")

    if restricted_coderivative is None:
        x_set = chart.polyhedral_set()
        if x_set is None:
            raise UnsupportedRestrictionSet(
                "exact restricted coderivative needs an affine chart; supply "
                "restricted_coderivative for curved charts")
        sx = s.restrict(x_set)
        _require_on_graph(sx, xbar, ubar)
        dsx = coderivative(sx, xbar, ubar)
    else:
        dsx = restricted_coderivative

    npairs = graph_to_normal_pairs(dsx.graph, m, n)
    t_sub = chart.tangent_space([float(v) for v in xb])

    proj_form = project_cone_union(t_sub, npairs, trailing=m)
    cut = ConvexPolyhedron.from_hrep(
        [], [],
        [tuple(row) + (ZERO,) * m for row in t_sub.polar_cone().lineality],
        [ZERO] * len(t_sub.polar_cone().lineality), dim=n + m)
    inter_form = npairs.intersect_piecewise(cut)

    equal, bad = cone_union_equal(proj_form, inter_form)
    if not equal:
        raise FormsDisagree(f"projection and intersection forms differ: {bad}")

    hmap = PosHomMap(m, n, normal_pairs_to_graph(proj_form, n, m))
    return ProjCodeResult(hmap, "manifold-fixed-point", proj_form,
                          diagnostics={"forms_equal": True})


# ------------------------------------------------ smooth single-valued


def projcode_smooth_single_valued(f_components, chart: ManifoldChart, xbar,
                                  y) -> np.ndarray:
    """proj onto the tangent space of the adjoint-Jacobian action at xbar."""
    comps = [parse_expr(c, chart.ambient_dim) if isinstance(c, str) else c
             for c in f_components]
    x = np.asarray(xbar, dtype=float)
    jac = np.array([c.eval_grad(x)[1] for c in comps], dtype=float)
    p = chart.tangent_projector(x)
    y = np.asarray(y, dtype=float)
    return p @ (jac.T @ y)


def sampled_chart_singlevalued(f_components, chart: ManifoldChart, xbar, y,
                               radii=(1e-2, 1e-3, 1e-4), per_radius: int = 60,
                               seed: int = 0) -> list[np.ndarray]:
    """Sampled outer-limit values of the fixed-point expression along
    manifold points approaching xbar (oracle for the formula above)."""
    comps = [parse_expr(c, chart.ambient_dim) if isinstance(c, str) else c
             for c in f_components]
    rng = np.random.default_rng(seed)
    xb = np.asarray(xbar, dtype=float)
    y = np.asarray(y, dtype=float)
    out = []
    for r in radii:
        for _ in range(per_radius):
            x0 = xb + r * rng.normal(size=len(xb))
            xk = _project_to_chart(chart, x0)
            if xk is None or np.linalg.norm(xk - xb) < 1e-14:
                continue
            yk = y + r * rng.normal(size=len(y))
            jac = np.array([c.eval_grad(xk)[1] for c in comps], dtype=float)
            out.append(chart.tangent_projector(xk) @ (jac.T @ yk))
    return out


def _project_to_chart(chart: ManifoldChart, x0: np.ndarray, iters: int = 40):
    x = np.array(x0, dtype=float)
    for _ in range(iters):
        f = np.array([c.eval(x) for c in chart.components])
        if np.max(np.abs(f), initial=0.0) < 1e-12:
            return x if chart.in_validity_region(x) else None
        j = np.array([c.eval_grad(x)[1] for c in chart.components])
        try:
            step = j.T @ np.linalg.solve(j @ j.T, f)
        except np.linalg.LinAlgError:
            return None
        x = x - step
    return None


# ----------------------------------------------------------- sampled route


@dataclass(frozen=True)
class SampleBudget:
    r0: float = 0.1
    gamma: float = 0.5
    levels: int = 5
    per_radius: int = 200
    seed: int = 0
    theta_tol_deg: float = 2.0
    persistence: int = 3
    min_support: int = 2
    act_frac: float = 0.1

    def radii(self) -> list[float]:
        return [self.r0 * self.gamma ** j for j in range(self.levels)]

    def to_json(self) -> dict:
        return {"r0": self.r0, "gamma": self.gamma, "levels": self.levels,
                "per_radius": self.per_radius, "seed": self.seed,
                "theta_tol_deg": self.theta_tol_deg,
                "persistence": self.persistence,
                "min_support": self.min_support, "act_frac": self.act_frac}


def projcode_sampled(s, x_set: FiniteUnionSet, xbar, ubar,
                     budget: SampleBudget = SampleBudget()) -> ProjCodeResult:
    """Annulus-sampling estimator of the projectional coderivative.

    Every emitted generator is a certified limit direction: the reference
    point's own projected regular normal cone enters exactly, polyhedral
    samples contribute exact per-signature cones, and smooth samples must
    persist across the smallest radii before they are kept.
    """
    if not x_set.is_convex_representable():
        raise UnsupportedRestrictionSet("sampled route expects convex X")
    if isinstance(s, PolyMap):
        return _sampled_polymap(s, x_set, xbar, ubar, budget)
    if isinstance(s, SmoothGraphMap):
        return _sampled_smooth(s, x_set, xbar, ubar, budget)
    raise TypeError("unsupported mapping type for the sampled route")


def _x_tangent_exact(x_set: FiniteUnionSet, x) -> ConvexPolyhedron:
    t = tangent_cone_at(x_set, x)
    return _tangent_piece_of_union(t)


def _sampled_polymap(s: PolyMap, x_set, xbar, ubar, budget) -> ProjCodeResult:
    n, m = s.n, s.m
    sx = s.restrict(x_set)
    zbar = _require_on_graph(sx, xbar, ubar)
    rng = np.random.default_rng(budget.seed)

    k_local = local_cone_model(sx.graph, zbar)
    x_local = local_cone_model(x_set, la.vec(xbar))
    local_set = FiniteUnionSet.from_pieces(list(k_local.pieces), dim=n + m)
    x_local_set = FiniteUnionSet.from_pieces(list(x_local.pieces), dim=n)

    def signature(zeta):
        sig = []
        for idx, p in enumerate(k_local.pieces):
            if p.contains(zeta):
                act = frozenset(i for i, (row, rhs) in enumerate(zip(p.A, p.b))
                                if la.dot(row, zeta) == rhs)
                sig.append((idx, act))
        return tuple(sig)

    pieces = {}

    def add_contribution(zeta):
        sig = signature(zeta)
        if sig in pieces or not sig:
            return
        ncone = limiting_normal_cone_at(local_set, zeta)
        t_piece = _x_tangent_exact(x_local_set, zeta[:n])
        pieces[sig] = project_cone_union(t_piece, ncone, trailing=m).pieces

    # the reference point itself (constant sequences are admissible limits)
    add_contribution(tuple(ZERO for _ in range(n + m)))
    samples = 0
    for _ in budget.radii():
        for piece in k_local.pieces:
            gens = [np.array(la.vec_float(g)) for g in
                    piece.rays + piece.lineality + tuple(la.neg(l) for l in piece.lineality)]
            if not gens:
                continue
            for _ in range(max(1, budget.per_radius // max(1, len(k_local.pieces)))):
                size = rng.integers(1, len(gens) + 1)
                chosen = rng.choice(len(gens), size=size, replace=False)
                lam = rng.exponential(1.0, size=size)
                z = sum(l * gens[i] for l, i in zip(lam, chosen))
                zeta = la.vec([float(v) for v in z])
                samples += 1
                add_contribution(zeta)
    if samples == 0 and len(pieces) == 0:
        raise InsufficientSamples("no graph samples were generated")

    all_pieces = [p for ps in pieces.values() for p in ps]
    limsup = ConeUnion.from_pieces(all_pieces, dim=n + m) if all_pieces \
        else ConeUnion.empty(n + m)
    hmap = PosHomMap(m, n, normal_pairs_to_graph(limsup, n, m))
    return ProjCodeResult(hmap, "sampled", limsup,
                          diagnostics={"signatures": len(pieces),
                                       "samples": samples,
                                       "budget": budget.to_json()})


def _sampled_smooth(s: SmoothGraphMap, x_set, xbar, ubar, budget) -> ProjCodeResult:
    n, m = s.n, s.m
    dim = n + m
    zbar = np.array(list(map(float, xbar)) + list(map(float, ubar)))
    if not s.graph_contains(zbar, ON_GRAPH_TOL):
        raise PointNotOnGraph("reference pair violates the graph inequalities")
    x_piece_exact = _x_tangent_exact(x_set, la.vec(xbar))
    rng = np.random.default_rng(budget.seed)
    warnings = []

    # exact center contribution from the active gradients at the point
    act_idx, act_grads = s.active_gradients(zbar, ON_GRAPH_TOL)
    center_pieces = []
    licq_fail_center = False
    if act_idx:
        rays, lines = _fold_antipodal(act_grads)
        if _conic_rank_deficient(rays, lines):
            licq_fail_center = True
            warnings.append("active gradients at the reference point are "
                            "dependent; center contribution skipped")
        else:
            center = ConvexPolyhedron.cone_from_generators(
                [tuple(la.frac(float(v)) for v in r) for r in rays],
                [tuple(la.frac(float(v)) for v in l) for l in lines], dim=dim)
            img = project_cone_union(
                x_piece_exact, ConeUnion.from_pieces([center], dim=dim), trailing=m)
            center_pieces = list(img.pieces)

    xpiece = x_set.pieces[0]
    xA = np.array([[float(v) for v in row] for row in xpiece.A]).reshape(len(xpiece.A), n)
    xb_rhs = np.array([float(v) for v in xpiece.b])
    xC = np.array([[float(v) for v in row] for row in xpiece.C]).reshape(len(xpiece.C), n)

    projector_cache: dict[frozenset, ConeProjector] = {}

    def x_projector(x: np.ndarray, eta: float) -> ConeProjector:
        act = frozenset(i for i in range(len(xb_rhs))
                        if xA[i] @ x >= xb_rhs[i] - eta * max(1.0, np.linalg.norm(xA[i])))
        if act not in projector_cache:
            rows = [tuple(la.frac(float(v)) for v in xA[i]) for i in sorted(act)]
            tangent = ConvexPolyhedron.from_hrep(
                rows, [ZERO] * len(rows),
                [tuple(la.frac(float(v)) for v in r) for r in xC],
                [ZERO] * len(xC), dim=n)
            projector_cache[act] = ConeProjector(tangent)
        return projector_cache[act]

    levels = []
    drops = 0
    accepted = 0
    tight = 1e-9
    for r in budget.radii():
        dirs = []
        eta = budget.act_frac * r
        tries = 0
        while len(dirs) < budget.per_radius and tries < budget.per_radius * 60:
            tries += 1
            d = rng.normal(size=dim)
            d /= np.linalg.norm(d)
            z = zbar + r * float(rng.uniform(0.5, 1.0)) * d
            vals = s.values(z)
            if np.any(vals > eta):
                continue
            if not x_set.contains(tuple(map(float, z[:n])), eta):
                continue
            candidates = [i for i, v in enumerate(vals) if v >= -eta]
            if not candidates:
                accepted += 1
                continue  # interior sample, regular normal cone is {0}
            # pull the sample onto its candidate boundary stratum so that
            # activity and the tangent cone of X are evaluated exactly there
            zp = _newton_to_active(s, z, candidates)
            if zp is None:
                continue
            if np.linalg.norm(zp - zbar) < 0.05 * r:
                continue  # collapsed to the reference point (handled exactly)
            if np.any(s.values(zp) > tight):
                continue
            if not x_set.contains(tuple(map(float, zp[:n])), tight):
                continue
            accepted += 1
            act = [i for i, v in enumerate(s.values(zp)) if v >= -tight]
            if not act:
                continue
            grads = np.array([s.inequalities[i].eval_grad(zp)[1] for i in act])
            rays, lines = _fold_antipodal(grads)
            if _conic_rank_deficient(rays, lines):
                drops += 1
                continue
            proj = x_projector(zp[:n], tight)
            emit = [g for g in rays]
            emit += [l for l in lines] + [-l for l in lines]
            if len(rays) >= 2:
                for w in rng.dirichlet(np.ones(len(rays)), size=3):
                    emit.append(w @ np.array(rays))
            for g in emit:
                v = np.concatenate([proj.apply(g[:n]), g[n:]])
                nv = np.linalg.norm(v)
                if nv > 1e-9:
                    dirs.append(v / nv)
        levels.append(sorted(dirs, key=lambda v: tuple(np.round(v, 12))))
    if accepted == 0 and not center_pieces:
        raise InsufficientSamples("no graph points found in any annulus")
    if accepted and drops / max(1, accepted) > 0.10:
        warnings.append(f"LICQ failures on {drops}/{accepted} samples; "
                        "result reliability reduced")

    theta = math.radians(budget.theta_tol_deg)
    chord = 2 * math.sin(theta / 2)
    persistent = []
    last = levels[-1]
    probe_levels = levels[-budget.persistence:-1] if budget.persistence > 1 else []
    claimed = []
    for v in last:
        if any(np.linalg.norm(v - w) <= chord for w in claimed):
            continue
        members = [w for w in last if np.linalg.norm(v - w) <= chord]
        if len(members) < budget.min_support:
            continue
        ok = all(any(np.linalg.norm(v - w) <= chord for w in lvl)
                 for lvl in probe_levels)
        if ok:
            claimed.append(v)
            rep = np.mean(members, axis=0)
            persistent.append(rep / np.linalg.norm(rep))

    ray_pieces = [ConvexPolyhedron.cone_from_generators(
        [tuple(la.frac(float(x)) for x in v)], dim=dim) for v in persistent]
    all_pieces = center_pieces + ray_pieces
    limsup = ConeUnion.from_pieces(all_pieces, dim=dim) if all_pieces \
        else ConeUnion.empty(dim)
    hmap = PosHomMap(m, n, normal_pairs_to_graph(limsup, n, m))
    diag = {"accepted": accepted, "licq_drops": drops,
            "persistent_rays": len(persistent),
            "licq_fail_center": licq_fail_center,
            "budget": budget.to_json()}
    return ProjCodeResult(hmap, "sampled", limsup, diagnostics=diag,
                          warnings=warnings)


def _newton_to_active(s: SmoothGraphMap, z: np.ndarray, act, iters: int = 25):
    """Gauss-Newton pull of z onto {h_i = 0, i in act}.

    Least squares absorbs the rank deficiency of equality-encoded pairs
    (antipodal rows carry consistent residuals).
    """
    z = np.array(z, dtype=float)
    for _ in range(iters):
        vals = np.array([s.inequalities[i].eval(z) for i in act])
        if np.max(np.abs(vals), initial=0.0) < 1e-13:
            return z
        j = np.array([s.inequalities[i].eval_grad(z)[1] for i in act])
        step, *_ = np.linalg.lstsq(j, vals, rcond=None)
        if not np.all(np.isfinite(step)):
            return None
        z = z - step
    vals = np.array([s.inequalities[i].eval(z) for i in act])
    return z if np.max(np.abs(vals), initial=0.0) < 1e-11 else None


def _fold_antipodal(grads: np.ndarray):
    """Split gradient rows into rays and lines (antipodal pairs fold)."""
    rows = [g for g in np.asarray(grads, dtype=float)]
    rays, lines = [], []
    used = [False] * len(rows)
    for i, g in enumerate(rows):
        if used[i]:
            continue
        ng = np.linalg.norm(g)
        if ng < 1e-14:
            used[i] = True
            continue
        paired = False
        for j in range(i + 1, len(rows)):
            if used[j]:
                continue
            h = rows[j]
            nh = np.linalg.norm(h)
            if nh < 1e-14:
                continue
            if np.dot(g, h) / (ng * nh) < -1 + 1e-12:
                lines.append(g)
                used[i] = used[j] = True
                paired = True
                break
        if not paired:
            rays.append(g)
            used[i] = True
    return rays, lines


def _conic_rank_deficient(rays, lines, tol: float = 1e-8) -> bool:
    stack = [g for g in rays] + [l for l in lines]
    if not stack:
        return False
    mat = np.array(stack, dtype=float)
    svals = np.linalg.svd(mat, compute_uv=False)
    return bool(svals.size and svals[-1] <= tol)
