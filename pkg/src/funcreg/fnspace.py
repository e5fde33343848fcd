"""Function algebra on T = [-1, 1].

Functions are finite linear combinations of analytic atoms. Inner products are
computed with composite Gauss-Legendre quadrature whose panel edges include
every discontinuity of the functions involved, so indicator atoms are
integrated piecewise-exactly.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DependentInput

MAX_POLY_DEGREE = 16
DEFAULT_PANELS = 200
DEFAULT_ORDER = 10


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class Constant:
    def __call__(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    breakpoints = ()
    parity = 1

    def token(self) -> str:
        return "const()"


@dataclass(frozen=True)
class Cosine:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"Cosine frequency must be a positive integer, got {self.k}")

    def __call__(self, t):
        return np.cos(math.pi * self.k * np.asarray(t, dtype=float))

    breakpoints = ()
    parity = 1

    def token(self) -> str:
        return f"cos({self.k})"


@dataclass(frozen=True)
class Sine:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"Sine frequency must be a positive integer, got {self.k}")

    def __call__(self, t):
        return np.sin(math.pi * self.k * np.asarray(t, dtype=float))

    breakpoints = ()
    parity = -1

    def token(self) -> str:
        return f"sin({self.k})"


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in monomial order: ``coeffs[j]`` multiplies ``t**j``."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("Polynomial needs at least one coefficient")
        if len(coeffs) - 1 > MAX_POLY_DEGREE:
            raise ValueError(f"Polynomial degree capped at {MAX_POLY_DEGREE}")
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.coeffs)

    breakpoints = ()

    @property
    def parity(self) -> int:
        if all(c == 0.0 for c in self.coeffs[1::2]):
            return 1
        if all(c == 0.0 for c in self.coeffs[0::2]):
            return -1
        return 0

    def token(self) -> str:
        return "poly(" + ",".join(repr(c) for c in self.coeffs) + ")"


@dataclass(frozen=True)
class Indicator:
    """Indicator of the closed interval ``[a, b]``."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (-1.0 <= a < b <= 1.0):
            raise ValueError(f"Indicator needs -1 <= a < b <= 1, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return ((t >= self.a) & (t <= self.b)).astype(float)

    @property
    def breakpoints(self):
        return tuple(x for x in (self.a, self.b) if -1.0 < x < 1.0)

    @property
    def parity(self) -> int:
        return 1 if self.a == -self.b else 0

    def token(self) -> str:
        return f"ind({self.a!r},{self.b!r})"


Atom = Constant | Cosine | Sine | Polynomial | Indicator


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class FunctionExpr:
    """Immutable weighted sum of atoms.

    Terms sharing an atom are merged on construction through :meth:`of`, and
    exact-zero weights are dropped.
    """

    terms: tuple = ()

    @classmethod
    def of(cls, terms: Iterable[tuple[float, Atom]]) -> "FunctionExpr":
        merged: dict = {}
        for w, atom in terms:
            merged[atom] = merged.get(atom, 0.0) + float(w)
        return cls(tuple((w, a) for a, w in merged.items() if w != 0.0))

    @classmethod
    def atom(cls, atom: Atom, weight: float = 1.0) -> "FunctionExpr":
        return cls.of([(weight, atom)])

    @classmethod
    def zero(cls) -> "FunctionExpr":
        return cls(())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for w, atom in self.terms:
            out = out + w * atom(t)
        return out

    def __add__(self, other: "FunctionExpr") -> "FunctionExpr":
        return FunctionExpr.of(self.terms + other.terms)

    def __sub__(self, other: "FunctionExpr") -> "FunctionExpr":
        return self + (-1.0) * other

    def __mul__(self, c: float) -> "FunctionExpr":
        return FunctionExpr.of((c * w, a) for w, a in self.terms)

    __rmul__ = __mul__

    def __neg__(self) -> "FunctionExpr":
        return (-1.0) * self

    @property
    def atoms(self) -> tuple:
        return tuple(a for _, a in self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms], dtype=float)

    @property
    def breakpoints(self) -> tuple:
        pts = set()
        for _, atom in self.terms:
            pts.update(atom.breakpoints)
        return tuple(sorted(pts))

    @property
    def parity(self) -> int:
        """1 if even, -1 if odd, 0 if mixed or unknown (zero counts as even)."""
        pars = {atom.parity for _, atom in self.terms}
        if not pars:
            return 1
        return pars.pop() if len(pars) == 1 else 0

    def __str__(self) -> str:
        return format_expr(self)


def combine(coeffs: Sequence[float], funcs: Sequence[FunctionExpr]) -> FunctionExpr:
    """Return ``sum(c_j * f_j)`` with merged terms."""
    terms = []
    for c, f in zip(coeffs, funcs):
        c = float(c)
        if c != 0.0:
            terms.extend((c * w, a) for w, a in f.terms)
    return FunctionExpr.of(terms)


def evaluate(f: FunctionExpr, t) -> np.ndarray | float:
    """Evaluate ``f`` at points of T; points outside [-1, 1] are rejected."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < -1.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise ValueError("evaluation points must lie in [-1, 1]")
    out = f(arr)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    key: tuple

    @property
    def size(self) -> int:
        return self.nodes.size


@lru_cache(maxsize=64)
def composite_rule(panels: int = DEFAULT_PANELS, order: int = DEFAULT_ORDER,
                   breakpoints: tuple = ()) -> QuadratureRule:
    """Composite Gauss-Legendre rule on [-1, 1].

    ``breakpoints`` are forced to be panel edges; uniform edges closer than
    1e-12 to a breakpoint are snapped onto it.
    """
    edges = np.linspace(-1.0, 1.0, panels + 1)
    for b in breakpoints:
        i = int(np.argmin(np.abs(edges - b)))
        if abs(edges[i] - b) < 1e-12:
            edges[i] = b
        else:
            edges = np.sort(np.append(edges, b))
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    edges.setflags(write=False)
    return QuadratureRule(nodes, weights, edges, (panels, order, tuple(breakpoints)))


def default_rule() -> QuadratureRule:
    return composite_rule()


def rule_for(*funcs: FunctionExpr, base: QuadratureRule | None = None) -> QuadratureRule:
    """Smallest cached rule whose edges cover every breakpoint of ``funcs``."""
    pts = set()
    for f in funcs:
        pts.update(f.breakpoints)
    panels, order, base_pts = (base or default_rule()).key
    pts.update(base_pts)
    return composite_rule(panels, order, tuple(sorted(pts)))


_ATOM_VALUES: dict = {}


def atom_values(atom: Atom, rule: QuadratureRule) -> np.ndarray:
    key = (atom, rule.key)
    vals = _ATOM_VALUES.get(key)
    if vals is None:
        vals = np.ascontiguousarray(atom(rule.nodes), dtype=float)
        vals.setflags(write=False)
        _ATOM_VALUES[key] = vals
    return vals


def values(f: FunctionExpr, rule: QuadratureRule) -> np.ndarray:
    """Values of ``f`` at the nodes of ``rule``."""
    if not f.terms:
        return np.zeros(rule.size)
    table = np.stack([atom_values(a, rule) for _, a in f.terms])
    return f.weights @ table


def value_matrix(funcs: Sequence[FunctionExpr], rule: QuadratureRule) -> np.ndarray:
    if not funcs:
        return np.zeros((0, rule.size))
    return np.stack([values(f, rule) for f in funcs])


_TRIG = (Constant, Cosine, Sine)


def _trig_gram(fs: Sequence[FunctionExpr], gs: Sequence[FunctionExpr]) -> np.ndarray | None:
    """Closed-form Gram matrix when every atom is trigonometric, else ``None``.

    ``1, cos(k pi t), sin(k pi t)`` are mutually orthogonal on [-1, 1] with
    squared norms 2, 1 and 1.
    """
    index: dict = {}
    for f in (*fs, *gs):
        for _, a in f.terms:
            if not isinstance(a, _TRIG):
                return None
            index.setdefault(a, len(index))
    sq = np.array([2.0 if isinstance(a, Constant) else 1.0 for a in index])

    def coef(funcs):
        M = np.zeros((len(funcs), len(index)))
        for i, f in enumerate(funcs):
            for w, a in f.terms:
                M[i, index[a]] += w
        return M

    F = coef(fs)
    G = F if gs is fs else coef(gs)
    return (F * sq) @ G.T


def inner_product(f: FunctionExpr, g: FunctionExpr, rule: QuadratureRule | None = None) -> float:
    """L2 inner product on [-1, 1].

    Exact for trigonometric atoms when no rule is given, otherwise by quadrature.
    """
    if rule is None:
        exact = _trig_gram([f], [g])
        if exact is not None:
            return float(exact[0, 0])
    rule = rule_for(f, g, base=rule)
    return float(np.dot(rule.weights * values(f, rule), values(g, rule)))


def norm(f: FunctionExpr, rule: QuadratureRule | None = None) -> float:
    return math.sqrt(max(inner_product(f, f, rule), 0.0))


def gram(fs: Sequence[FunctionExpr], gs: Sequence[FunctionExpr] | None = None,
         rule: QuadratureRule | None = None) -> np.ndarray:
    """Matrix of inner products ``G[i, j] = <fs[i], gs[j]>``."""
    if gs is None:
        gs = fs
    if rule is None:
        exact = _trig_gram(fs, gs)
        if exact is not None:
            return exact
    rule = rule_for(*fs, *gs, base=rule)
    F = value_matrix(fs, rule)
    G = F if gs is fs else value_matrix(gs, rule)
    return (F * rule.weights) @ G.T


def gram_schmidt(fs: Sequence[FunctionExpr], rule: QuadratureRule | None = None,
                 tol: float = 1e-10) -> list[FunctionExpr]:
    """Orthonormalize ``fs`` with modified Gram-Schmidt and one re-orthogonalization pass.

    Raises
    ------
    DependentInput
        If the residual of some input, relative to its own norm, drops below ``tol``.
    """
    fs = list(fs)
    if not fs:
        return []
    rule = rule_for(*fs, base=rule)
    V = np.ascontiguousarray(value_matrix(fs, rule))
    T, _, failed = kernels.mgs_weighted(V, np.ascontiguousarray(rule.weights), tol)
    if failed >= 0:
        raise DependentInput(f"input {failed} is linearly dependent on its predecessors")
    return [combine(T[i, : i + 1], fs[: i + 1]) for i in range(len(fs))]


# ---------------------------------------------------------------------------
# term-list serialization

_ATOM_RE = re.compile(r"(?<![A-Za-z_])(const|cos|sin|poly|ind)\(([^()]*)\)")
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}


def eval_number(text: str, names: dict | None = None) -> float:
    """Evaluate a small arithmetic expression (numbers, pi, e, sqrt, + - * / **).

    ``names`` adds extra variables, e.g. ``{"d": 3}`` for schedule rules.
    """
    scope = dict(_NAMES, **(names or {}))

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in scope:
            return float(scope[node.id])
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id == "sqrt" and len(node.args) == 1):
            return math.sqrt(ev(node.args[0]))
        raise ValueError(f"unsupported expression: {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


def _make_atom(kind: str, args: list[float]) -> Atom:
    if kind == "const":
        if args:
            raise ValueError("const() takes no arguments")
        return Constant()
    if kind in ("cos", "sin"):
        if len(args) != 1 or args[0] != int(args[0]):
            raise ValueError(f"{kind}() takes one integer frequency")
        return (Cosine if kind == "cos" else Sine)(int(args[0]))
    if kind == "poly":
        return Polynomial(tuple(args))
    if len(args) != 2:
        raise ValueError("ind() takes two endpoints")
    return Indicator(args[0], args[1])


def parse_expr(text: str) -> FunctionExpr:
    """Parse ``weight*kind(args) + ...``; a missing weight means 1."""
    text = text.strip()
    if text in ("", "0", "0.0"):
        return FunctionExpr.zero()
    terms = []
    pos = 0
    for m in _ATOM_RE.finditer(text):
        w_text = text[pos:m.start()].strip()
        if w_text.startswith("+"):
            w_text = w_text[1:].strip()
        if w_text.endswith("*"):
            w_text = w_text[:-1].strip()
        elif w_text not in ("", "-"):
            raise ValueError(f"expected '*' between weight and atom in {text!r}")
        weight = 1.0 if w_text == "" else -1.0 if w_text == "-" else eval_number(w_text)
        raw = [a for a in m.group(2).split(",") if a.strip()]
        terms.append((weight, _make_atom(m.group(1), [eval_number(a) for a in raw])))
        pos = m.end()
    if text[pos:].strip() or not terms:
        raise ValueError(f"trailing or unparseable content in {text!r}")
    return FunctionExpr.of(terms)


def parity_parts(f: FunctionExpr) -> tuple[FunctionExpr, FunctionExpr]:
    """Split ``f`` into its even and odd parts, term by term and exactly."""
    even, odd = [], []
    for w, a in f.terms:
        if isinstance(a, Polynomial) and a.parity == 0:
            ev = tuple(c if j % 2 == 0 else 0.0 for j, c in enumerate(a.coeffs))
            od = tuple(c if j % 2 == 1 else 0.0 for j, c in enumerate(a.coeffs))
            even.append((w, Polynomial(ev)))
            odd.append((w, Polynomial(od)))
        elif isinstance(a, Indicator) and a.parity == 0:
            mirror = Indicator(-a.b, -a.a)
            even += [(0.5 * w, a), (0.5 * w, mirror)]
            odd += [(0.5 * w, a), (-0.5 * w, mirror)]
        elif a.parity == 1:
            even.append((w, a))
        else:
            odd.append((w, a))
    return FunctionExpr.of(even), FunctionExpr.of(odd)


def format_expr(f: FunctionExpr) -> str:
    if not f.terms:
        return "0"
    return " + ".join(f"{w!r}*{a.token()}" for w, a in f.terms)


# ---------------------------------------------------------------------------
# named functions used throughout


def legendre_even_atoms() -> list[FunctionExpr]:
    """Normalized Legendre polynomials of degree 0, 2 and 4."""
    return [
        FunctionExpr.atom(Constant(), 1.0 / math.sqrt(2.0)),
        FunctionExpr.atom(Polynomial((-1.0, 0.0, 3.0)), math.sqrt(5.0 / 8.0)),
        FunctionExpr.atom(Polynomial((3.0, 0.0, -30.0, 0.0, 35.0)), math.sqrt(9.0 / 128.0)),
    ]


def linear_legendre() -> FunctionExpr:
    return FunctionExpr.atom(Polynomial((0.0, 1.0)), math.sqrt(1.5))
