"""Problem documents: schema validation, command dispatch, report emission.

A document declares named sets, charts, and maps plus exactly one query.
Validation collects every error (schema violations carry JSON-pointer
paths).  Reports are plain JSON, deterministic for a fixed seed, with a
reproducibility block pinning seed, budgets, tolerances, and version.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import jsonschema

from . import __version__
from . import _linalg as la
from .calculus import chain_verify, sum_rule_1, sum_rule_2
from .cones import ConeUnion
from .criterion import (equivalence_battery, glm_criterion, lip_oracle,
                        modulus_inequality_scan, outer_norm)
from .errors import DimensionTooHigh, SchemaViolation, VakError
from .geometry import ConvexPolyhedron
from .manifold import ManifoldChart
from .maps import PolyMap, PosHomMap, SmoothGraphMap, coderivative, \
    regular_coderivative, sum_graph
from .projcode import SampleBudget
from .sets import FiniteUnionSet, limiting_normal_cone_at, \
    regular_normal_cone_at, tangent_cone_at

SCHEMA_VERSION = 1

COMMANDS = ("cone", "normalcone", "coderivative", "projcode", "criterion",
            "battery", "chain", "sum", "oracle", "outernorm")

TOLERANCES = {"membership": 1e-9, "cross_validation": 1e-7, "moreau": 1e-10}

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_vector = {"type": "array", "items": {"type": "number"}}

_piece_schema = {
    "type": "object",
    "properties": {
        "A": _matrix, "b": _vector, "C": _matrix, "d": _vector,
        "vertices": _matrix, "rays": _matrix, "lineality": _matrix,
    },
    "additionalProperties": False,
}

DOCUMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "query"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "sets": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "dim", "pieces"],
                "properties": {
                    "name": {"type": "string"},
                    "dim": {"type": "integer", "minimum": 1},
                    "pieces": {"type": "array", "items": _piece_schema},
                },
            },
        },
        "charts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "ambient_dim", "components", "center", "radius"],
                "properties": {
                    "name": {"type": "string"},
                    "ambient_dim": {"type": "integer", "minimum": 1},
                    "components": {"type": "array", "items": {"type": "string"}},
                    "center": _vector,
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "maps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "n", "m"],
                "properties": {
                    "name": {"type": "string"},
                    "n": {"type": "integer", "minimum": 1},
                    "m": {"type": "integer", "minimum": 1},
                    "graph_pieces": {"type": "array", "items": _piece_schema},
                    "inequalities": {"type": "array", "items": {"type": "string"}},
                    "center": _vector,
                    "radius": {"type": "number"},
                },
            },
        },
        "query": {
            "type": "object",
            "required": ["command"],
            "properties": {
                "command": {"enum": list(COMMANDS)},
                "set": {"type": "string"},
                "chart": {"type": "string"},
                "map": {"type": "string"},
                "maps": {"type": "array", "items": {"type": "string"}},
                "inner": {"type": "string"},
                "outer": {"type": "string"},
                "point": _vector,
                "value": _vector,
                "regular": {"type": "boolean"},
                "posmap": {
                    "type": "object",
                    "required": ["input_dim", "output_dim", "pieces"],
                    "properties": {
                        "input_dim": {"type": "integer", "minimum": 1},
                        "output_dim": {"type": "integer", "minimum": 1},
                        "pieces": {"type": "array", "items": _piece_schema},
                    },
                },
                "rule": {"enum": [1, 2, "both"]},
                "params": {"type": "object"},
            },
        },
    },
}


@dataclass
class ProblemDocument:
    sets: dict
    charts: dict
    maps: dict
    query: dict
    raw: dict

    def canonical_json(self) -> str:
        """Canonical serialization; parsing it back reproduces this document."""
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))


def _build_piece(spec: dict, dim: int) -> ConvexPolyhedron:
    if any(k in spec for k in ("vertices", "rays", "lineality")):
        return ConvexPolyhedron.from_vrep(
            spec.get("vertices", ()), spec.get("rays", ()),
            spec.get("lineality", ()), dim=dim)
    return ConvexPolyhedron.from_hrep(
        spec.get("A", ()), spec.get("b", ()), spec.get("C", ()),
        spec.get("d", ()), dim=dim)


def parse_problem(text_or_dict) -> ProblemDocument:
    """Validate and materialize a document; raises SchemaViolation with the
    full error list (never fail-fast)."""
    if isinstance(text_or_dict, (str, bytes)):
        try:
            raw = json.loads(text_or_dict)
        except json.JSONDecodeError as exc:
            raise SchemaViolation([f"/: invalid JSON ({exc.msg})"]) from exc
    else:
        raw = text_or_dict

    validator = jsonschema.Draft202012Validator(DOCUMENT_SCHEMA)
    errors = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: e.json_path):
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        errors.append(f"{pointer}: {err.message}")
    if errors:
        raise SchemaViolation(errors)

    sets, charts, maps = {}, {}, {}
    semantic = []
    for i, spec in enumerate(raw.get("sets", [])):
        try:
            pieces = [_build_piece(p, spec["dim"]) for p in spec["pieces"]]
            sets[spec["name"]] = FiniteUnionSet.from_pieces(pieces, dim=spec["dim"])
        except (VakError, ValueError, TypeError) as exc:
            semantic.append(f"/sets/{i}: {exc}")
    for i, spec in enumerate(raw.get("charts", [])):
        try:
            charts[spec["name"]] = ManifoldChart.from_strings(
                spec["ambient_dim"], spec["components"], spec["center"],
                spec["radius"])
        except (VakError, ValueError) as exc:
            semantic.append(f"/charts/{i}: {exc}")
    for i, spec in enumerate(raw.get("maps", [])):
        n, m = spec["n"], spec["m"]
        try:
            if "inequalities" in spec:
                maps[spec["name"]] = SmoothGraphMap.from_strings(
                    n, m, spec["inequalities"],
                    spec.get("center", [0.0] * (n + m)),
                    spec.get("radius", 1.0))
            elif "graph_pieces" in spec:
                pieces = [_build_piece(p, n + m) for p in spec["graph_pieces"]]
                maps[spec["name"]] = PolyMap(
                    n, m, FiniteUnionSet.from_pieces(pieces, dim=n + m))
            else:
                semantic.append(
                    f"/maps/{i}: needs graph_pieces or inequalities")
        except (VakError, ValueError, TypeError) as exc:
            semantic.append(f"/maps/{i}: {exc}")

    query = raw["query"]
    for key, registry, label in (("set", sets, "sets"), ("chart", charts, "charts"),
                                 ("map", maps, "maps"), ("inner", maps, "maps"),
                                 ("outer", maps, "maps")):
        name = query.get(key)
        if name is not None and name not in registry:
            semantic.append(f"/query/{key}: unresolved name {name!r} in {label}")
    for j, name in enumerate(query.get("maps", [])):
        if name not in maps:
            semantic.append(f"/query/maps/{j}: unresolved name {name!r}")
    if semantic:
        raise SchemaViolation(semantic)
    return ProblemDocument(sets=sets, charts=charts, maps=maps, query=query,
                           raw=raw)


# --------------------------------------------------------------- dispatch


def _budget_from_params(params: dict) -> SampleBudget:
    r = params.get("radii", {})
    return SampleBudget(
        r0=float(r.get("r0", 0.1)), gamma=float(r.get("gamma", 0.5)),
        levels=int(r.get("count", 5)),
        per_radius=int(params.get("samples_per_radius", 200)),
        seed=int(params.get("seed", 0)),
        theta_tol_deg=float(params.get("theta_tol_deg", 2.0)),
        min_support=int(params.get("min_support", 2)),
        act_frac=float(params.get("act_frac", 0.1)))


def run_command(doc: ProblemDocument) -> tuple[dict, ConeUnion | None]:
    """Dispatch the query; returns (report, plottable cone union or None)."""
    q = doc.query
    cmd = q["command"]
    params = q.get("params", {})
    exact = bool(params.get("exact", False))
    budget = _budget_from_params(params)
    point = tuple(q.get("point", ()))
    value = tuple(q.get("value", ()))
    x_set = doc.sets.get(q.get("set", "")) if q.get("set") else None
    chart = doc.charts.get(q.get("chart", "")) if q.get("chart") else None
    smap = doc.maps.get(q.get("map", "")) if q.get("map") else None

    result: dict = {}
    plot: ConeUnion | None = None
    warnings: list[str] = []

    if cmd == "cone":
        t = tangent_cone_at(x_set, point)
        result = {"tangent_cone": _union_json(t, exact)}
        plot = t
    elif cmd == "normalcone":
        reg = regular_normal_cone_at(x_set, point)
        lim = limiting_normal_cone_at(x_set, point)
        reg_union = ConeUnion.from_pieces([reg], dim=x_set.dim) \
            if not reg.is_empty else ConeUnion.empty(x_set.dim)
        result = {"regular_normal_cone": _union_json(reg_union, exact),
                  "limiting_normal_cone": _union_json(lim, exact)}
        plot = lim
    elif cmd == "coderivative":
        fn = regular_coderivative if q.get("regular") else coderivative
        d = fn(smap, point, value)
        result = {"graph": _union_json(d.graph, exact),
                  "input_dim": d.input_dim, "output_dim": d.output_dim}
        plot = d.graph
    elif cmd == "projcode":
        pc = _run_projcode(doc, q, smap, x_set, chart, point, value, params, budget)
        result = pc.to_json()
        result["graph"] = _union_json(pc.map.graph, exact)
        result["swapped_presentation"] = _union_json(pc.presentation(), exact)
        warnings.extend(pc.warnings)
        plot = pc.presentation()
    elif cmd == "criterion":
        rep = glm_criterion(smap, x_set, point, value,
                            route=params.get("route", "auto"), chart=chart,
                            budget=budget)
        result = rep.to_json()
        if rep.projcode is not None:
            result["graph"] = _union_json(rep.projcode.map.graph, exact)
            plot = rep.projcode.presentation()
        warnings.extend(rep.warnings)
        if params.get("kappa") is not None and isinstance(smap, PolyMap):
            scan = modulus_inequality_scan(smap, x_set, point, value,
                                           kappa=float(params["kappa"]))
            result["inequality_scan"] = scan
        if params.get("oracle") and isinstance(smap, PolyMap):
            ob = params["oracle"]
            est = lip_oracle(smap, x_set, point, value,
                             rho=float(ob.get("rho", 0.1)),
                             sigma=float(ob.get("sigma", 0.1)),
                             pairs=int(ob.get("pairs", 10_000)),
                             seed=int(params.get("seed", 0)))
            result["oracle_estimate"] = est["estimate"]
    elif cmd == "battery":
        rep = equivalence_battery(smap, x_set, point, value)
        result = rep.to_json()
        result["consistent"] = rep.battery_consistent()
        warnings.extend(rep.warnings)
    elif cmd == "chain":
        rep = chain_verify(doc.maps[q["inner"]], doc.maps[q["outer"]],
                           x_set, point, value)
        result = rep.to_json()
        warnings.extend(rep.warnings)
    elif cmd == "sum":
        s_list = [doc.maps[name] for name in q["maps"]]
        rule = q.get("rule", "both")
        if rule in (1, "both"):
            result["rule1"] = sum_rule_1(s_list, x_set, point, value).to_json()
        if rule in (2, "both"):
            result["rule2"] = sum_rule_2(s_list, x_set, point, value).to_json()
        if params.get("materialize"):
            grid = params["materialize"].get("grid", [])
            result["materialized_values"] = [
                {"x": g, "value": sum_graph(s_list, tuple(g)).to_json()}
                for g in grid]
    elif cmd == "oracle":
        out = lip_oracle(smap, x_set, point, value,
                         rho=float(params.get("rho", 0.1)),
                         sigma=float(params.get("sigma", 0.1)),
                         pairs=int(params.get("pairs", 10_000)),
                         seed=int(params.get("seed", 0)))
        result = out
    elif cmd == "outernorm":
        pm_spec = q["posmap"]
        mi, no = pm_spec["input_dim"], pm_spec["output_dim"]
        pieces = [_build_piece(p, mi + no) for p in pm_spec["pieces"]]
        h = PosHomMap(mi, no, ConeUnion.from_pieces(pieces, dim=mi + no))
        result = outer_norm(h).to_json()
    else:  # pragma: no cover - schema forbids it
        raise VakError(f"unknown command {cmd!r}")

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": cmd,
        "result": result,
        "warnings": warnings,
        "reproducibility": {
            "seed": int(params.get("seed", 0)),
            "budgets": budget.to_json(),
            "tolerances": dict(TOLERANCES),
            "version": __version__,
            "exact": exact,
        },
    }
    return report, plot


def _run_projcode(doc, q, smap, x_set, chart, point, value, params, budget):
    from .projcode import (projcode_manifold_fixed_point, projcode_polyhedral,
                           projcode_sampled)

    route = params.get("route", "auto")
    if route == "auto":
        if isinstance(smap, SmoothGraphMap):
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
        return projcode_polyhedral(smap, x_set, point, value)
    if route == "manifold":
        return projcode_manifold_fixed_point(smap, chart, point, value)
    if x_set is None and chart is not None and chart.is_affine():
        x_set = chart.polyhedral_set()
    return projcode_sampled(smap, x_set, point, value, budget)


# ----------------------------------------------------------- serialization


def _frac_str(x: Fraction) -> str:
    return str(x)


def _piece_json(p: ConvexPolyhedron, exact: bool) -> dict:
    if not exact:
        return p.vrep_float()
    return {
        "vertices": [[_frac_str(v) for v in row] for row in p.vertices],
        "rays": [[_frac_str(v) for v in row] for row in p.rays],
        "lineality": [[_frac_str(v) for v in row] for row in p.lineality],
    }


def _union_json(k: ConeUnion, exact: bool) -> dict:
    return {"dim": k.dim, "pieces": [_piece_json(p, exact) for p in k.pieces]}


def canonical_report_json(report: dict) -> str:
    """Byte-stable serialization (sorted keys, minimal separators)."""
    return json.dumps(report, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def _sanitize(obj):
    """Replace non-finite floats so reports stay valid JSON."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def finalize_report(report: dict) -> dict:
    return _sanitize(report)


# ------------------------------------------------------------------- plots


def emit_plot_data(plot: ConeUnion | None, fmt: str = "csv",
                   arc_step_deg: float = 2.0) -> str:
    """Unit-sphere boundary polylines per piece, deterministic ordering."""
    if plot is None:
        series = []
    else:
        if plot.dim > 3:
            raise DimensionTooHigh("plot emission supports ambient dim <= 3")
        series = [_piece_polyline(p, plot.dim, arc_step_deg)
                  for p in plot.pieces]
    if fmt == "json":
        return json.dumps({"series": series}, sort_keys=True)
    lines = ["series,vertex,x,y,z"]
    for si, poly in enumerate(series):
        for vi, pt in enumerate(poly):
            padded = list(pt) + [0.0] * (3 - len(pt))
            lines.append(f"{si},{vi}," + ",".join(f"{v:.12g}" for v in padded))
    return "\n".join(lines) + "\n"


def _piece_polyline(p: ConvexPolyhedron, dim: int, arc_step_deg: float):
    gens = []
    for g in list(p.rays) + list(p.lineality) + [la.neg(l) for l in p.lineality]:
        v = [float(x) for x in g]
        nrm = math.sqrt(sum(x * x for x in v))
        if nrm > 0:
            gens.append([x / nrm for x in v])
    if not gens:
        return []
    if len(gens) == 1:
        return [[0.0] * dim, gens[0]]
    if dim == 2:
        angles = sorted(math.atan2(g[1], g[0]) for g in gens)
        spans = [(angles[i], angles[i + 1]) for i in range(len(angles) - 1)]
        # a full plane shows as the whole circle
        if p.affine_dim() == 2 and not p.A:
            spans = [(-math.pi, math.pi)]
        pts = []
        for a0, a1 in spans:
            steps = max(1, int(math.degrees(a1 - a0) / arc_step_deg))
            for k in range(steps + 1):
                t = a0 + (a1 - a0) * k / steps
                pts.append([math.cos(t), math.sin(t)])
        return pts
    # dim 3: arcs along the 2-dimensional faces, then generator fans
    pts = []
    for face in p.faces():
        if face.affine_hull_dim != 2:
            continue
        fgens = []
        fp = face.polyhedron
        for g in list(fp.rays) + list(fp.lineality) + [la.neg(l) for l in fp.lineality]:
            v = [float(x) for x in g]
            nrm = math.sqrt(sum(x * x for x in v))
            if nrm > 0:
                fgens.append([x / nrm for x in v])
        for a, b in zip(fgens, fgens[1:]):
            pts.extend(_arc_between(a, b, arc_step_deg))
    if not pts:
        for a, b in zip(gens, gens[1:]):
            pts.extend(_arc_between(a, b, arc_step_deg))
    return pts


def _arc_between(a, b, arc_step_deg):
    import numpy as np

    av, bv = np.array(a), np.array(b)
    cosang = float(np.clip(av @ bv, -1.0, 1.0))
    ang = math.acos(cosang)
    if ang < 1e-12:
        return [a]
    steps = max(1, int(math.degrees(ang) / arc_step_deg))
    out = []
    for k in range(steps + 1):
        t = k / steps
        v = math.sin((1 - t) * ang) / math.sin(ang) * av + \
            math.sin(t * ang) / math.sin(ang) * bv
        out.append([float(x) for x in v / np.linalg.norm(v)])
    return out
