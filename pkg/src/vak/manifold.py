"""Smooth restriction sets X = {x : F(x) = 0} via a small expression language.

Expressions are prefix s-expressions over variables x1..xn (charts) or
x1..xn, u1..um (graph inequalities), e.g. ``(- (+ (pow x1 2) (pow x2 2)) 1)``.
Evaluation and forward-mode derivatives are exact up to float arithmetic;
affine expressions are detected structurally, which unlocks the exact
rational path (affine manifolds double as polyhedral sets).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _linalg as la
from .errors import DegenerateChord, RankDeficient, VakError
from .geometry import ConvexPolyhedron


class ExpressionError(VakError):
    code = "expression-error"


class ExpressionDomainError(VakError):
    """Division (or negative power) hit a near-zero denominator."""

    code = "expression-domain"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")
DIV_GUARD = 1e-12


@dataclass(frozen=True)
class Expr:
    """Expression tree node."""

    kind: str                       # const | var | add | sub | neg | mul | div | pow | exp | tanh
    value: Fraction | None = None   # const
    index: int | None = None        # var (0-based), pow exponent
    children: tuple["Expr", ...] = field(default_factory=tuple)

    # -- evaluation ----------------------------------------------------

    def eval(self, x) -> float:
        return self._ev(np.asarray(x, dtype=float))

    def _ev(self, x: np.ndarray) -> float:
        k = self.kind
        if k == "const":
            return float(self.value)
        if k == "var":
            return float(x[self.index])
        ch = [c._ev(x) for c in self.children]
        if k == "add":
            return math.fsum(ch)
        if k == "sub":
            return ch[0] - ch[1]
        if k == "neg":
            return -ch[0]
        if k == "mul":
            out = 1.0
            for v in ch:
                out *= v
            return out
        if k == "div":
            if abs(ch[1]) < DIV_GUARD:
                raise ExpressionDomainError(f"division by {ch[1]!r}")
            return ch[0] / ch[1]
        if k == "pow":
            if self.index < 0 and abs(ch[0]) < DIV_GUARD:
                raise ExpressionDomainError("negative power of near-zero base")
            return ch[0] ** self.index
        if k == "exp":
            return math.exp(ch[0])
        if k == "tanh":
            return math.tanh(ch[0])
        raise ExpressionError(f"unknown node kind {k!r}")

    def eval_grad(self, x) -> tuple[float, np.ndarray]:
        """Forward-mode value and gradient."""
        x = np.asarray(x, dtype=float)
        return self._fwd(x, len(x))

    def _fwd(self, x: np.ndarray, n: int) -> tuple[float, np.ndarray]:
        k = self.kind
        if k == "const":
            return float(self.value), np.zeros(n)
        if k == "var":
            g = np.zeros(n)
            g[self.index] = 1.0
            return float(x[self.index]), g
        ch = [c._fwd(x, n) for c in self.children]
        if k == "add":
            return math.fsum(v for v, _ in ch), sum(g for _, g in ch)
        if k == "sub":
            return ch[0][0] - ch[1][0], ch[0][1] - ch[1][1]
        if k == "neg":
            return -ch[0][0], -ch[0][1]
        if k == "mul":
            v, g = ch[0]
            for v2, g2 in ch[1:]:
                v, g = v * v2, g * v2 + g2 * v
            return v, g
        if k == "div":
            (u, du), (w, dw) = ch
            if abs(w) < DIV_GUARD:
                raise ExpressionDomainError(f"division by {w!r}")
            return u / w, (du * w - u * dw) / (w * w)
        if k == "pow":
            v, g = ch[0]
            p = self.index
            if p == 0:
                return 1.0, np.zeros(n)
            if p < 0 and abs(v) < DIV_GUARD:
                raise ExpressionDomainError("negative power of near-zero base")
            return v ** p, p * v ** (p - 1) * g
        if k == "exp":
            v, g = ch[0]
            e = math.exp(v)
            return e, e * g
        if k == "tanh":
            v, g = ch[0]
            t = math.tanh(v)
            return t, (1.0 - t * t) * g
        raise ExpressionError(f"unknown node kind {k!r}")

    # -- structure -------------------------------------------------------

    def affine_form(self, n: int) -> tuple[la.Vec, Fraction] | None:
        """(coefficients, constant) when the tree is affine, else None."""
        k = self.kind
        zero = tuple(la.ZERO for _ in range(n))
        if k == "const":
            return zero, self.value
        if k == "var":
            row = list(zero)
            row[self.index] = la.ONE
            return tuple(row), la.ZERO
        forms = [c.affine_form(n) for c in self.children]
        if any(f is None for f in forms):
            return None
        if k == "add":
            row, c = zero, la.ZERO
            for r2, c2 in forms:
                row, c = la.add(row, r2), c + c2
            return row, c
        if k == "sub":
            return la.sub(forms[0][0], forms[1][0]), forms[0][1] - forms[1][1]
        if k == "neg":
            return la.neg(forms[0][0]), -forms[0][1]
        if k == "mul":
            return _mul_affine(forms, n)
        if k == "div":
            r2, c2 = forms[1]
            if not la.is_zero(r2) or c2 == 0:
                return None
            return la.scale(forms[0][0], la.ONE / c2), forms[0][1] / c2
        if k == "pow":
            r0, c0 = forms[0]
            if self.index == 0:
                return zero, la.ONE
            if self.index == 1:
                return r0, c0
            if la.is_zero(r0):
                if self.index < 0 and c0 == 0:
                    return None
                return zero, c0 ** self.index
            return None
        return None  # exp/tanh are never affine


def _mul_affine(forms, n):
    """Affine product when at most one factor carries a linear part."""
    row = tuple(la.ZERO for _ in range(n))
    const = la.ONE
    for r2, c2 in forms:
        if la.is_zero(r2):
            row = la.scale(row, c2)
            const = const * c2
        elif la.is_zero(row):
            row = la.scale(r2, const)
            const = const * c2
            # the linear part of r2 scaled by remaining constants is handled
            # by subsequent iterations scaling `row`
        else:
            return None
    return row, const


def parse_expr(text: str, n_x: int, n_u: int = 0) -> Expr:
    """Parse a prefix s-expression over x1..x{n_x} (and u1..u{n_u})."""
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ExpressionError("empty expression")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise ExpressionError("unexpected end of expression")
        t = tokens[pos]
        pos += 1
        return t

    def parse_atom(tok: str) -> Expr:
        m = re.fullmatch(r"x(\d+)", tok)
        if m:
            i = int(m.group(1))
            if not 1 <= i <= n_x:
                raise ExpressionError(f"variable {tok} out of range 1..{n_x}")
            return Expr("var", index=i - 1)
        m = re.fullmatch(r"u(\d+)", tok)
        if m:
            i = int(m.group(1))
            if not 1 <= i <= n_u:
                raise ExpressionError(f"variable {tok} out of range 1..{n_u}")
            return Expr("var", index=n_x + i - 1)
        try:
            return Expr("const", value=la.frac(tok))
        except (ValueError, ZeroDivisionError) as exc:
            raise ExpressionError(f"bad token {tok!r}") from exc

    def parse_node() -> Expr:
        nonlocal pos
        tok = take()
        if tok == ")":
            raise ExpressionError("unexpected ')'")
        if tok != "(":
            return parse_atom(tok)
        op = take()
        args: list[Expr] = []
        while True:
            if pos >= len(tokens):
                raise ExpressionError("missing ')'")
            if tokens[pos] == ")":
                pos += 1
                break
            args.append(parse_node())
        return make_node(op, args)

    def make_node(op: str, args: list[Expr]) -> Expr:
        if op == "+":
            if len(args) < 2:
                raise ExpressionError("+ needs two or more arguments")
            return Expr("add", children=tuple(args))
        if op == "-":
            if len(args) == 1:
                return Expr("neg", children=tuple(args))
            if len(args) == 2:
                return Expr("sub", children=tuple(args))
            raise ExpressionError("- takes one or two arguments")
        if op == "*":
            if len(args) < 2:
                raise ExpressionError("* needs two or more arguments")
            return Expr("mul", children=tuple(args))
        if op == "/":
            if len(args) != 2:
                raise ExpressionError("/ takes two arguments")
            return Expr("div", children=tuple(args))
        if op == "pow":
            if len(args) != 2 or args[1].kind != "const" or args[1].value.denominator != 1:
                raise ExpressionError("pow takes (pow base integer)")
            return Expr("pow", index=int(args[1].value), children=(args[0],))
        if op in ("exp", "tanh"):
            if len(args) != 1:
                raise ExpressionError(f"{op} takes one argument")
            return Expr(op, children=tuple(args))
        raise ExpressionError(f"unknown operator {op!r}")

    root = parse_node()
    if pos != len(tokens):
        raise ExpressionError("trailing tokens after expression")
    return root


# ------------------------------------------------------------------ chart


RANK_TOL = 1e-8


@dataclass(frozen=True)
class ManifoldChart:
    """X = {x in validity ball : F(x) = 0} with full-rank Jacobian."""

    ambient_dim: int
    components: tuple[Expr, ...]
    center: tuple[float, ...]
    radius: float

    @staticmethod
    def from_strings(ambient_dim: int, components, center, radius) -> "ManifoldChart":
        comps = tuple(parse_expr(s, ambient_dim) for s in components)
        return ManifoldChart(ambient_dim, comps, tuple(float(c) for c in center),
                             float(radius))

    @property
    def codim(self) -> int:
        return len(self.components)

    def in_validity_region(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - np.asarray(self.center)) <= self.radius + 1e-12)

    def residual(self, x) -> float:
        return max((abs(c.eval(x)) for c in self.components), default=0.0)

    def on_manifold(self, x, tol: float = 1e-8) -> bool:
        return self.in_validity_region(x) and self.residual(x) <= tol

    def jacobian(self, x) -> np.ndarray:
        if not self.in_validity_region(x):
            raise ValueError("point outside the chart validity region")
        rows = [c.eval_grad(x)[1] for c in self.components]
        j = np.array(rows, dtype=float).reshape(self.codim, self.ambient_dim)
        if self.codim:
            s = np.linalg.svd(j, compute_uv=False)
            if s.size == 0 or s[-1] <= RANK_TOL:
                raise RankDeficient(f"Jacobian rank drops at {tuple(map(float, x))}")
        return j

    def is_affine(self) -> bool:
        return all(c.affine_form(self.ambient_dim) is not None for c in self.components)

    def affine_system(self) -> tuple[la.Mat, la.Vec] | None:
        """Exact (M, c) with X = {x : Mx = c} for affine charts."""
        rows, rhs = [], []
        for comp in self.components:
            form = comp.affine_form(self.ambient_dim)
            if form is None:
                return None
            row, const = form
            rows.append(row)
            rhs.append(-const)
        return tuple(rows), tuple(rhs)

    def tangent_space(self, x) -> ConvexPolyhedron:
        """Null space of the Jacobian as a lineality-only cone."""
        if self.is_affine():
            m, _ = self.affine_system()
            basis = la.nullspace(m, self.ambient_dim)
        else:
            j = self.jacobian(x)
            basis = _float_nullspace(j)
        return ConvexPolyhedron.cone_from_generators(
            lineality=basis, dim=self.ambient_dim)

    def normal_space(self, x) -> ConvexPolyhedron:
        if self.is_affine():
            m, _ = self.affine_system()
            rows = [r for r in m]
        else:
            rows = [tuple(la.frac(float(v)) for v in row) for row in self.jacobian(x)]
        return ConvexPolyhedron.cone_from_generators(lineality=rows, dim=self.ambient_dim)

    def tangent_projector(self, x) -> np.ndarray:
        j = self.jacobian(x)
        if self.codim == 0:
            return np.eye(self.ambient_dim)
        g = j @ j.T
        p = np.eye(self.ambient_dim) - j.T @ np.linalg.solve(g, j)
        return p

    def tangent_projector_exact(self, x=None) -> la.Mat:
        """Rational projector; exact for affine charts, rationalized otherwise."""
        if self.is_affine():
            m, _ = self.affine_system()
            rows = [r for r in m if not la.is_zero(r)]
            if not rows:
                return la.identity(self.ambient_dim)
            normal_proj = la.projector_onto_span(tuple(rows), self.ambient_dim)
        else:
            j = self.jacobian(x)
            rows = [tuple(la.frac(float(v)) for v in row) for row in j]
            normal_proj = la.projector_onto_span(tuple(rows), self.ambient_dim)
        eye = la.identity(self.ambient_dim)
        return tuple(tuple(eye[i][k] - normal_proj[i][k] for k in range(self.ambient_dim))
                     for i in range(self.ambient_dim))

    def polyhedral_set(self):
        """Affine charts double as a one-piece polyhedral set."""
        sys_ = self.affine_system()
        if sys_ is None:
            return None
        m, c = sys_
        from .sets import FiniteUnionSet

        return FiniteUnionSet.from_pieces(
            [ConvexPolyhedron.from_hrep([], [], m, c, dim=self.ambient_dim)])


def _float_nullspace(j: np.ndarray) -> list[tuple]:
    _, s, vt = np.linalg.svd(j)
    rank = int(np.sum(s > RANK_TOL))
    basis = vt[rank:]
    return [tuple(la.frac(float(v)) for v in row) for row in basis]


def jacobian(chart: ManifoldChart, x) -> np.ndarray:
    return chart.jacobian(x)


def tangent_space(chart: ManifoldChart, x) -> ConvexPolyhedron:
    return chart.tangent_space(x)


def tangent_projector(chart: ManifoldChart, x) -> np.ndarray:
    return chart.tangent_projector(x)


def chord_tangency_defect(chart: ManifoldChart, x, y) -> float:
    """|w - P(x) w| for the unit chord w; decays as y -> x on the manifold."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    delta = y - x
    nrm = np.linalg.norm(delta)
    if nrm < 1e-12:
        raise DegenerateChord("chord endpoints coincide")
    w = delta / nrm
    p = chart.tangent_projector(x)
    return float(np.linalg.norm(w - p @ w))
