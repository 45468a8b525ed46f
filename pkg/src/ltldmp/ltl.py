"""Finite-trace temporal logic over trajectory terms.

A formula talks about one trajectory (position ``p``, per-step displacement
``dp``) and a fixed set of static points ``o1..oK``.  Terms are vector
expressions over those; atoms compare two terms; formulas combine atoms with
boolean connectives and the temporal operators N (next), G (always),
F (eventually) and U (until).

Concrete syntax, loosest to tightest binding::

    ->   |   &   U   (N G F !)   atom

All formula binaries are right-associative.  Comparisons are
``< <= = != >= >``; a comparison between vector terms of equal length means
the conjunction over components (for ``=`` all equal, for ``!=`` at least one
component differs).  Vector literals are written ``<0.1, 0.2>``.  Selectors
``.x .y .z .roll .pitch .yaw`` pick components; ``.xyz`` and ``.rpy`` slice
the position and orientation halves of a 6-d state.  ``sqnorm(t)`` and
``norm(t)`` reduce a vector term to a scalar, ``speed`` abbreviates
``norm(dp)``.

Until is the strong overlap form: ``a U b`` holds at i when some j >= i has
b true at j and a true on every step of [i, j] inclusive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class SpecSyntaxError(ValueError):
    """Unparseable spec text; carries the offending position."""

    def __init__(self, message: str, position: int, expected: str = ""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.expected = expected


class SpecSemanticsError(ValueError):
    """Well-formed text with inconsistent dimensions or unknown references."""


class UnsupportedNegation(ValueError):
    """Negation normal form would require negating an until subformula."""


@dataclass(frozen=True)
class SpecSchema:
    """Trajectory dimensionality and number of static objects."""

    d: int
    k_objects: int

    def __post_init__(self):
        if self.d < 1:
            raise SpecSemanticsError(f"schema needs d >= 1, got {self.d}")
        if self.k_objects < 0:
            raise SpecSemanticsError(f"schema needs k_objects >= 0, got {self.k_objects}")


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class TrajPos:
    """The trajectory point at the current step."""


@dataclass(frozen=True)
class TrajVel:
    """Per-step displacement points[t+1] - points[t] (final step repeated)."""


@dataclass(frozen=True)
class ObjectRef:
    index: int  # zero-based; prints as o<index+1>


@dataclass(frozen=True)
class Component:
    term: "Term"
    axis: int


@dataclass(frozen=True)
class SliceSel:
    term: "Term"
    lo: int
    hi: int


@dataclass(frozen=True)
class VecConst:
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScalarConst:
    value: float


@dataclass(frozen=True)
class SqNorm:
    term: "Term"


@dataclass(frozen=True)
class Norm:
    term: "Term"


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Scale:
    factor: float
    term: "Term"


Term = Union[
    TrajPos, TrajVel, ObjectRef, Component, SliceSel, VecConst, ScalarConst,
    SqNorm, Norm, Add, Sub, Scale,
]


# ---------------------------------------------------------------------------
# formulas


COMPARISONS = ("<", "<=", "=", "!=", ">=", ">")

# negation of each comparison; an involution
FLIP = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">=": "<", ">": "<="}


@dataclass(frozen=True)
class Atom:
    left: Term
    op: str
    right: Term

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise SpecSemanticsError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


@dataclass(frozen=True)
class Always:
    arg: "Formula"


@dataclass(frozen=True)
class Eventually:
    arg: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Next, Always, Eventually, Until]


# ---------------------------------------------------------------------------
# dimensions


AXIS_NAMES = ("x", "y", "z", "roll", "pitch", "yaw")
SLICE_SELECTORS = {"xyz": (0, 3), "rpy": (3, 6)}


def term_dim(term: Term, schema: SpecSchema) -> int:
    """Vector length of a term; raises SpecSemanticsError on inconsistency."""
    if isinstance(term, (TrajPos, TrajVel)):
        return schema.d
    if isinstance(term, ObjectRef):
        if not 0 <= term.index < schema.k_objects:
            raise SpecSemanticsError(
                f"object o{term.index + 1} out of range (have {schema.k_objects})"
            )
        return schema.d
    if isinstance(term, Component):
        inner = term_dim(term.term, schema)
        if not 0 <= term.axis < inner:
            raise SpecSemanticsError(
                f"component {term.axis} out of range for {inner}-d term"
            )
        return 1
    if isinstance(term, SliceSel):
        inner = term_dim(term.term, schema)
        if not 0 <= term.lo < term.hi <= inner:
            raise SpecSemanticsError(
                f"slice [{term.lo}:{term.hi}] out of range for {inner}-d term"
            )
        return term.hi - term.lo
    if isinstance(term, VecConst):
        if len(term.values) < 2:
            raise SpecSemanticsError("vector literal needs at least 2 entries")
        return len(term.values)
    if isinstance(term, ScalarConst):
        return 1
    if isinstance(term, (SqNorm, Norm)):
        term_dim(term.term, schema)
        return 1
    if isinstance(term, (Add, Sub)):
        dl = term_dim(term.left, schema)
        dr = term_dim(term.right, schema)
        if dl != dr:
            raise SpecSemanticsError(f"dimension mismatch {dl} vs {dr} in +/-")
        return dl
    if isinstance(term, Scale):
        return term_dim(term.term, schema)
    raise SpecSemanticsError(f"not a term: {term!r}")


def make_atom(left: Term, op: str, right: Term, schema: SpecSchema) -> Formula:
    """Comparison with dimension checks; vector orderings expand to And chains.

    Expanding ``<``, ``<=``, ``>=``, ``>`` over components here keeps negation
    sound later: the component conjunction becomes a disjunction under NNF,
    which a single flipped vector atom could not express.
    """
    dl = term_dim(left, schema)
    dr = term_dim(right, schema)
    if dl != dr:
        raise SpecSemanticsError(f"comparison between {dl}-d and {dr}-d terms")
    if dl == 1 or op in ("=", "!="):
        return Atom(left, op, right)
    parts = [
        Atom(Component(left, k), op, Component(right, k)) for k in range(dl)
    ]
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def validate(formula: Formula, schema: SpecSchema) -> None:
    """Check every atom's dimensions against the schema."""
    if isinstance(formula, Atom):
        dl = term_dim(formula.left, schema)
        dr = term_dim(formula.right, schema)
        if dl != dr:
            raise SpecSemanticsError(f"comparison between {dl}-d and {dr}-d terms")
    elif isinstance(formula, (Not, Next, Always, Eventually)):
        validate(formula.arg, schema)
    elif isinstance(formula, (And, Or, Implies, Until)):
        validate(formula.left, schema)
        validate(formula.right, schema)
    else:
        raise SpecSemanticsError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# tokenizer


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>->|<=|>=|!=|[<>=!&|()+\-*.,])"
    r")"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # number | ident | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise SpecSyntaxError(f"unrecognized character {text[at]!r}", at)
        pos = m.end()
        for kind in ("number", "ident", "op"):
            val = m.group(kind)
            if val is not None:
                toks.append(_Tok(kind, val, m.start(kind)))
                break
    toks.append(_Tok("end", "", len(text)))
    return toks


# ---------------------------------------------------------------------------
# parser


_UNARY = {"G": Always, "F": Eventually, "N": Next}


class _Parser:
    def __init__(self, text: str, schema: SpecSchema):
        self.toks = _tokenize(text)
        self.i = 0
        self.schema = schema

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def expect_op(self, text: str) -> _Tok:
        t = self.next()
        if t.kind != "op" or t.text != text:
            raise SpecSyntaxError(
                f"expected {text!r}, found {t.text or 'end of input'!r}",
                t.pos,
                expected=text,
            )
        return t

    def fail(self, what: str) -> SpecSyntaxError:
        t = self.peek()
        return SpecSyntaxError(
            f"expected {what}, found {t.text or 'end of input'!r}", t.pos, expected=what
        )

    # formulas, loosest first

    def formula(self) -> Formula:
        lhs = self.or_level()
        if self.peek().kind == "op" and self.peek().text == "->":
            self.next()
            return Implies(lhs, self.formula())
        return lhs

    def or_level(self) -> Formula:
        lhs = self.and_level()
        if self.peek().kind == "op" and self.peek().text == "|":
            self.next()
            return Or(lhs, self.or_level())
        return lhs

    def and_level(self) -> Formula:
        lhs = self.until_level()
        if self.peek().kind == "op" and self.peek().text == "&":
            self.next()
            return And(lhs, self.and_level())
        return lhs

    def until_level(self) -> Formula:
        lhs = self.unary_level()
        if self.peek().kind == "ident" and self.peek().text == "U":
            self.next()
            return Until(lhs, self.until_level())
        return lhs

    def unary_level(self) -> Formula:
        t = self.peek()
        if t.kind == "op" and t.text == "!":
            self.next()
            return Not(self.unary_level())
        if t.kind == "ident" and t.text in _UNARY:
            self.next()
            return _UNARY[t.text](self.unary_level())
        return self.primary()

    def primary(self) -> Formula:
        t = self.peek()
        if t.kind == "op" and t.text == "(" and self._paren_is_group():
            self.next()
            inner = self.formula()
            self.expect_op(")")
            return inner
        return self.atom()

    def _paren_is_group(self) -> bool:
        # a '(' opens a formula group unless the token after its match
        # continues a term (comparison, arithmetic, or selector)
        depth = 0
        j = self.i
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind == "op" and t.text == "(":
                depth += 1
            elif t.kind == "op" and t.text == ")":
                depth -= 1
                if depth == 0:
                    nxt = self.toks[min(j + 1, len(self.toks) - 1)]
                    if nxt.kind == "op" and nxt.text in (
                        "<", "<=", "=", "!=", ">=", ">", "+", "-", "*", ".",
                    ):
                        return False
                    return True
            j += 1
        raise SpecSyntaxError("unbalanced parenthesis", self.toks[self.i].pos)

    def atom(self) -> Formula:
        left = self.term()
        t = self.next()
        if t.kind != "op" or t.text not in COMPARISONS:
            raise SpecSyntaxError(
                f"expected comparison, found {t.text or 'end of input'!r}",
                t.pos,
                expected="comparison",
            )
        right = self.term()
        return make_atom(left, t.text, right, self.schema)

    # terms

    def term(self) -> Term:
        lhs = self.term_scaled()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.term_scaled()
            lhs = Add(lhs, rhs) if op == "+" else Sub(lhs, rhs)
            self._dim(lhs)
        return lhs

    def term_scaled(self) -> Term:
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.next()
            if self.peek().kind == "number":
                v = -float(self.next().text)
                if self.peek().kind == "op" and self.peek().text == "*":
                    self.next()
                    return Scale(v, self.term_scaled())
                return ScalarConst(v)
            inner = self.term_scaled()
            return Scale(-1.0, inner)
        if t.kind == "number" and self.peek(1).kind == "op" and self.peek(1).text == "*":
            v = float(self.next().text)
            self.next()
            return Scale(v, self.term_scaled())
        return self.term_postfix()

    def term_postfix(self) -> Term:
        base = self.term_atom()
        while self.peek().kind == "op" and self.peek().text == ".":
            self.next()
            sel = self.next()
            if sel.kind != "ident":
                raise SpecSyntaxError("expected selector after '.'", sel.pos)
            if sel.text in SLICE_SELECTORS:
                lo, hi = SLICE_SELECTORS[sel.text]
                base = SliceSel(base, lo, hi)
            elif sel.text in AXIS_NAMES:
                base = Component(base, AXIS_NAMES.index(sel.text))
            else:
                raise SpecSyntaxError(f"unknown selector {sel.text!r}", sel.pos)
            self._dim(base)
        return base

    def term_atom(self) -> Term:
        t = self.next()
        if t.kind == "op" and t.text == "(":
            inner = self.term()
            self.expect_op(")")
            return inner
        if t.kind == "op" and t.text == "<":
            return self.vector_literal()
        if t.kind == "number":
            return ScalarConst(float(t.text))
        if t.kind == "ident":
            if t.text == "p":
                return TrajPos()
            if t.text == "dp":
                return TrajVel()
            if t.text == "speed":
                return Norm(TrajVel())
            if t.text in ("sqnorm", "norm"):
                self.expect_op("(")
                inner = self.term()
                self.expect_op(")")
                return SqNorm(inner) if t.text == "sqnorm" else Norm(inner)
            m = re.fullmatch(r"o(\d+)", t.text)
            if m:
                ref = ObjectRef(int(m.group(1)) - 1)
                if not 0 <= ref.index < self.schema.k_objects:
                    raise SpecSemanticsError(
                        f"object {t.text} out of range "
                        f"(schema has {self.schema.k_objects} objects)"
                    )
                return ref
            raise SpecSyntaxError(f"unknown identifier {t.text!r}", t.pos)
        raise SpecSyntaxError(
            f"expected term, found {t.text or 'end of input'!r}", t.pos, expected="term"
        )

    def vector_literal(self) -> Term:
        values = []
        while True:
            sign = 1.0
            if self.peek().kind == "op" and self.peek().text == "-":
                self.next()
                sign = -1.0
            t = self.next()
            if t.kind != "number":
                raise SpecSyntaxError("expected number in vector literal", t.pos)
            values.append(sign * float(t.text))
            t = self.next()
            if t.kind == "op" and t.text == ">":
                break
            if not (t.kind == "op" and t.text == ","):
                raise SpecSyntaxError("expected ',' or '>' in vector literal", t.pos)
        if len(values) < 2:
            raise SpecSyntaxError("vector literal needs at least 2 entries", self.peek().pos)
        return VecConst(tuple(values))

    def _dim(self, term: Term) -> int:
        return term_dim(term, self.schema)


def parse_formula(text: str, schema: SpecSchema) -> Formula:
    """Parse spec text into a formula AST, checking dimensions as it goes."""
    p = _Parser(text, schema)
    f = p.formula()
    t = p.peek()
    if t.kind != "end":
        raise SpecSyntaxError(f"trailing input {t.text!r}", t.pos)
    return f


# ---------------------------------------------------------------------------
# pretty printer


def _fmt_num(v: float) -> str:
    return repr(float(v))


def _term_level(term: Term) -> int:
    # 1: + -,  2: scale,  3: atomic / postfix
    if isinstance(term, (Add, Sub)):
        return 1
    if isinstance(term, Scale):
        return 2
    return 3


def term_text(term: Term) -> str:
    if isinstance(term, TrajPos):
        return "p"
    if isinstance(term, TrajVel):
        return "dp"
    if isinstance(term, ObjectRef):
        return f"o{term.index + 1}"
    if isinstance(term, Norm) and isinstance(term.term, TrajVel):
        return "speed"
    if isinstance(term, ScalarConst):
        return _fmt_num(term.value)
    if isinstance(term, VecConst):
        return "<" + ", ".join(_fmt_num(v) for v in term.values) + ">"
    if isinstance(term, SqNorm):
        return f"sqnorm({term_text(term.term)})"
    if isinstance(term, Norm):
        return f"norm({term_text(term.term)})"
    if isinstance(term, Component):
        if not 0 <= term.axis < len(AXIS_NAMES):
            raise SpecSemanticsError(f"no selector name for axis {term.axis}")
        return f"{_postfix_base(term.term)}.{AXIS_NAMES[term.axis]}"
    if isinstance(term, SliceSel):
        for name, (lo, hi) in SLICE_SELECTORS.items():
            if (lo, hi) == (term.lo, term.hi):
                return f"{_postfix_base(term.term)}.{name}"
        raise SpecSemanticsError(f"no selector name for slice [{term.lo}:{term.hi}]")
    if isinstance(term, Scale):
        inner = term_text(term.term)
        if _term_level(term.term) <= 1:
            inner = f"({inner})"
        return f"{_fmt_num(term.factor)} * {inner}"
    if isinstance(term, (Add, Sub)):
        op = "+" if isinstance(term, Add) else "-"
        lhs = term_text(term.left)
        if _term_level(term.left) < 1:
            lhs = f"({lhs})"
        rhs = term_text(term.right)
        if _term_level(term.right) <= 1:
            rhs = f"({rhs})"
        return f"{lhs} {op} {rhs}"
    raise SpecSemanticsError(f"not a term: {term!r}")


def _postfix_base(term: Term) -> str:
    text = term_text(term)
    if _term_level(term) < 3:
        return f"({text})"
    return text


_FORMULA_LEVEL = {
    Implies: 0, Or: 1, And: 2, Until: 3,
    Not: 4, Next: 4, Always: 4, Eventually: 4,
    Atom: 5,
}


def to_text(formula: Formula) -> str:
    """Render a formula so that parsing the output rebuilds the same AST."""
    level = _FORMULA_LEVEL[type(formula)]

    def child(sub: Formula, minimum: int) -> str:
        text = to_text(sub)
        if _FORMULA_LEVEL[type(sub)] < minimum:
            return f"({text})"
        return text

    if isinstance(formula, Atom):
        return f"{term_text(formula.left)} {formula.op} {term_text(formula.right)}"
    if isinstance(formula, Not):
        return f"! {child(formula.arg, 4)}"
    if isinstance(formula, Next):
        return f"N {child(formula.arg, 4)}"
    if isinstance(formula, Always):
        return f"G {child(formula.arg, 4)}"
    if isinstance(formula, Eventually):
        return f"F {child(formula.arg, 4)}"
    if isinstance(formula, Until):
        return f"{child(formula.left, level + 1)} U {child(formula.right, level)}"
    if isinstance(formula, And):
        return f"{child(formula.left, level + 1)} & {child(formula.right, level)}"
    if isinstance(formula, Or):
        return f"{child(formula.left, level + 1)} | {child(formula.right, level)}"
    if isinstance(formula, Implies):
        return f"{child(formula.left, level + 1)} -> {child(formula.right, level)}"
    raise SpecSemanticsError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# negation normal form


def to_nnf(formula: Formula) -> Formula:
    """Eliminate -> and push ! down to atoms, flipping comparisons.

    Ordering atoms are flipped with the scalar negation table; parser output
    only ever holds scalar ordering atoms (vector orderings were expanded at
    parse time), so the flip is sound.  Negation over U has no representation
    here and raises UnsupportedNegation.
    """

    def walk(f: Formula, neg: bool) -> Formula:
        if isinstance(f, Atom):
            return Atom(f.left, FLIP[f.op], f.right) if neg else f
        if isinstance(f, Not):
            return walk(f.arg, not neg)
        if isinstance(f, Implies):
            return walk(Or(Not(f.left), f.right), neg)
        if isinstance(f, And):
            a, b = walk(f.left, neg), walk(f.right, neg)
            return Or(a, b) if neg else And(a, b)
        if isinstance(f, Or):
            a, b = walk(f.left, neg), walk(f.right, neg)
            return And(a, b) if neg else Or(a, b)
        if isinstance(f, Next):
            return Next(walk(f.arg, neg))
        if isinstance(f, Always):
            inner = walk(f.arg, neg)
            return Eventually(inner) if neg else Always(inner)
        if isinstance(f, Eventually):
            inner = walk(f.arg, neg)
            return Always(inner) if neg else Eventually(inner)
        if isinstance(f, Until):
            if neg:
                raise UnsupportedNegation(
                    "cannot push negation through U; rewrite the spec without "
                    "a negated until"
                )
            return Until(walk(f.left, False), walk(f.right, False))
        raise SpecSemanticsError(f"not a formula: {f!r}")

    return walk(formula, False)


def is_nnf(formula: Formula) -> bool:
    """True when ! appears only directly above atoms and -> not at all."""
    if isinstance(formula, Atom):
        return True
    if isinstance(formula, Not):
        return isinstance(formula.arg, Atom)
    if isinstance(formula, Implies):
        return False
    if isinstance(formula, (Next, Always, Eventually)):
        return is_nnf(formula.arg)
    if isinstance(formula, (And, Or, Until)):
        return is_nnf(formula.left) and is_nnf(formula.right)
    return False


# ---------------------------------------------------------------------------
# traces and qualitative evaluation


@dataclass(frozen=True)
class Trace:
    """Sampled trajectory: points (T, d) at uniform spacing dt.

    velocity[t] is the raw displacement points[t+1] - points[t]; the final
    row repeats so every step has one.
    """

    points: np.ndarray
    dt: float
    velocity: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError(f"trace needs (T >= 2, d) points, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("trace contains non-finite points")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        vel = np.empty_like(pts)
        vel[:-1] = pts[1:] - pts[:-1]
        vel[-1] = vel[-2]
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "velocity", vel)

    @property
    def steps(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def term_value(term: Term, trace: Trace, i: int, objects: np.ndarray) -> np.ndarray:
    """Evaluate a term at step i; returns a () or (dim,) float array."""
    if isinstance(term, TrajPos):
        return trace.points[i]
    if isinstance(term, TrajVel):
        return trace.velocity[i]
    if isinstance(term, ObjectRef):
        return np.asarray(objects, dtype=np.float64)[term.index]
    if isinstance(term, Component):
        return np.asarray(term_value(term.term, trace, i, objects))[term.axis]
    if isinstance(term, SliceSel):
        return np.asarray(term_value(term.term, trace, i, objects))[term.lo : term.hi]
    if isinstance(term, VecConst):
        return np.asarray(term.values, dtype=np.float64)
    if isinstance(term, ScalarConst):
        return np.float64(term.value)
    if isinstance(term, SqNorm):
        v = term_value(term.term, trace, i, objects)
        return np.sum(np.square(v))
    if isinstance(term, Norm):
        v = term_value(term.term, trace, i, objects)
        return np.sqrt(np.sum(np.square(v)))
    if isinstance(term, Add):
        return term_value(term.left, trace, i, objects) + term_value(
            term.right, trace, i, objects
        )
    if isinstance(term, Sub):
        return term_value(term.left, trace, i, objects) - term_value(
            term.right, trace, i, objects
        )
    if isinstance(term, Scale):
        return term.factor * np.asarray(term_value(term.term, trace, i, objects))
    raise SpecSemanticsError(f"not a term: {term!r}")


def _compare(op: str, a: np.ndarray, b: np.ndarray) -> bool:
    if op == "<=":
        return bool(np.all(a <= b))
    if op == "<":
        return bool(np.all(a < b))
    if op == ">=":
        return bool(np.all(a >= b))
    if op == ">":
        return bool(np.all(a > b))
    if op == "=":
        return bool(np.all(a == b))
    if op == "!=":
        return bool(np.any(a != b))
    raise SpecSemanticsError(f"unknown comparison {op!r}")


def eval_qualitative(
    formula: Formula, trace: Trace, i: int = 0, objects: np.ndarray | None = None
) -> bool:
    """Boolean finite-trace semantics, the ground truth the losses mirror."""
    objs = np.zeros((0, trace.d)) if objects is None else np.asarray(objects, float)
    T = trace.steps
    if not 0 <= i < T:
        raise ValueError(f"step {i} outside trace of length {T}")
    memo: dict[tuple[int, int], bool] = {}

    def ev(f: Formula, j: int) -> bool:
        key = (id(f), j)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(f, Atom):
            out = _compare(
                f.op,
                np.asarray(term_value(f.left, trace, j, objs)),
                np.asarray(term_value(f.right, trace, j, objs)),
            )
        elif isinstance(f, Not):
            out = not ev(f.arg, j)
        elif isinstance(f, And):
            out = ev(f.left, j) and ev(f.right, j)
        elif isinstance(f, Or):
            out = ev(f.left, j) or ev(f.right, j)
        elif isinstance(f, Implies):
            out = (not ev(f.left, j)) or ev(f.right, j)
        elif isinstance(f, Next):
            out = ev(f.arg, min(j + 1, T - 1))
        elif isinstance(f, Always):
            out = all(ev(f.arg, k) for k in range(j, T))
        elif isinstance(f, Eventually):
            out = any(ev(f.arg, k) for k in range(j, T))
        elif isinstance(f, Until):
            out = any(
                ev(f.right, k) and all(ev(f.left, m) for m in range(j, k + 1))
                for k in range(j, T)
            )
        else:
            raise SpecSemanticsError(f"not a formula: {f!r}")
        memo[key] = out
        return out

    return ev(formula, i)
