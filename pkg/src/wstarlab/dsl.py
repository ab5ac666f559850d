"""A small continuous-logic formula language.

Two sorts: *terms* denote elements of the algebra, *reals* denote numbers.
Binders ``sup``/``inf`` range over the unit ball ``S1`` of totally
1-bounded elements or over the projections ``Proj`` and produce reals.

Grammar (``*`` binds tighter than ``+``/``-``; both left associative)::

    real    := rsum
    rsum    := rprod (("+" | "-") rprod)*
    rprod   := ratom ("*" ratom)*
    ratom   := NUMBER "*" ratom                # scale
             | NUMBER
             | ("sup" | "inf") IDENT ":" ("S1" | "Proj") "." real
             | ("max" | "min") "(" real ("," real)+ ")"
             | "sharp(" term ")" | "re(state(" term "))" | "im(state(" term "))"
             | "abs(" real ")" | "sqrt(" real ")"
             | "(" real ")"
    term    := tsum
    tsum    := tprod (("+" | "-") tprod)*
    tprod   := tatom ("*" tatom)*
    tatom   := NUMBER "*" tatom | IDENT | "one" | "adj(" term ")"
             | "comm(" term "," term ")" | "sigma[" NUMBER "](" term ")"
             | "(" term ")"

``NUMBER`` is a decimal literal with optional exponent; a leading ``-`` is
allowed wherever a number starts an operand.  ``@chi_factor``,
``@phi_t(T)`` and ``@theta`` name the built-in sentences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import ParseError, SortError, UnboundVariable

TERM = "term"
REAL = "real"

TERM_KINDS = {"var", "one", "tscale", "tadd", "tsub", "tmul", "adj", "comm", "sigma"}
REAL_KINDS = {"sharp", "re_state", "im_state", "abs", "sqrt", "max", "min",
              "add", "sub", "mul", "scale", "const", "sup", "inf"}
BINDERS = {"sup", "inf"}
DOMAINS = ("S1", "Proj")
RESERVED = {"sup", "inf", "max", "min", "sharp", "re", "im", "state", "abs", "sqrt",
            "one", "comm", "adj", "sigma", "S1", "Proj"}


@dataclass(frozen=True)
class Node:
    """One AST node.  ``value`` carries numbers (const, scale factor, sigma time),
    ``name`` a variable name and ``domain`` a binder domain."""

    kind: str
    children: tuple = ()
    value: Optional[float] = None
    name: Optional[str] = None
    domain: Optional[str] = None

    @property
    def sort(self) -> str:
        return TERM if self.kind in TERM_KINDS else REAL


# constructors ---------------------------------------------------------------

def var(name):
    return Node("var", name=name)


def one():
    return Node("one")


def const(v):
    return Node("const", value=float(v))


def binder(kind, name, domain, body):
    return Node(kind, (body,), name=name, domain=domain)


def op(kind, *children, value=None):
    return Node(kind, tuple(children), value=None if value is None else float(value))


# sort and scope checking -----------------------------------------------------

_CHILD_SORTS = {
    "tscale": (TERM,), "tadd": (TERM, TERM), "tsub": (TERM, TERM), "tmul": (TERM, TERM),
    "adj": (TERM,), "comm": (TERM, TERM), "sigma": (TERM,),
    "sharp": (TERM,), "re_state": (TERM,), "im_state": (TERM,),
    "abs": (REAL,), "sqrt": (REAL,), "add": (REAL, REAL), "sub": (REAL, REAL),
    "mul": (REAL, REAL), "scale": (REAL,), "sup": (REAL,), "inf": (REAL,),
    "var": (), "one": (), "const": (),
}


def check(node: Node, free=(), expect: str = REAL) -> None:
    """Raise :class:`SortError` or :class:`UnboundVariable` unless ``node`` is well formed."""
    _check(node, frozenset(free), expect)


def _check(node, scope, expect):
    if not isinstance(node, Node):
        raise SortError(f"not an AST node: {node!r}")
    if node.kind not in TERM_KINDS | REAL_KINDS:
        raise SortError(f"unknown node kind {node.kind!r}")
    if node.sort != expect:
        raise SortError(f"{node.kind} is {node.sort}-sorted where a {expect} is required")
    if node.kind == "var":
        if node.name not in scope:
            raise UnboundVariable(f"variable {node.name!r} is not bound", field=node.name)
        return
    if node.kind in ("max", "min"):
        if len(node.children) < 2:
            raise SortError(f"{node.kind} needs at least two arguments")
        for c in node.children:
            _check(c, scope, REAL)
        return
    sorts = _CHILD_SORTS[node.kind]
    if len(node.children) != len(sorts):
        raise SortError(f"{node.kind} takes {len(sorts)} children, got {len(node.children)}")
    if node.kind in ("const", "scale", "tscale", "sigma") and node.value is None:
        raise SortError(f"{node.kind} needs a numeric value")
    if node.kind in BINDERS:
        if node.domain not in DOMAINS:
            raise SortError(f"unknown binder domain {node.domain!r}")
        if not node.name or node.name in RESERVED:
            raise SortError(f"bad bound variable name {node.name!r}")
        if node.name in scope:
            raise SortError(f"variable {node.name!r} is bound twice on one path")
        scope = scope | {node.name}
    for c, s in zip(node.children, sorts):
        _check(c, scope, s)


def binders(node: Node):
    """All binder nodes in pre-order."""
    out = []

    def walk(n):
        if n.kind in BINDERS:
            out.append(n)
        for c in n.children:
            walk(c)

    walk(node)
    return out


def free_vars(node: Node) -> set:
    if node.kind == "var":
        return {node.name}
    out = set()
    for c in node.children:
        out |= free_vars(c)
    if node.kind in BINDERS:
        out.discard(node.name)
    return out


# printing -------------------------------------------------------------------

def _num(v: float) -> str:
    return repr(float(v))


def to_text(node: Node) -> str:
    """Canonical text; ``parse(to_text(n)) == n`` for every well-sorted ``n``."""
    return _print(node, top=True)


def _wrap(s):
    return f"({s})"


def _operand(node, side, parent):
    s = _print(node)
    k = node.kind
    if k in BINDERS:
        return _wrap(s)
    if parent in ("add", "sub", "tadd", "tsub"):
        if side == "right" and k in ("add", "sub", "tadd", "tsub"):
            return _wrap(s)
        return s
    # multiplicative parents
    if k in ("add", "sub", "tadd", "tsub"):
        return _wrap(s)
    if parent in ("mul", "tmul"):
        if k == "const":
            return _wrap(s)
        if side == "right" and k in ("mul", "tmul"):
            return _wrap(s)
        return s
    # scale / tscale child; a bare number here would let the scale chain
    # swallow a following "* factor"
    if k in ("mul", "tmul", "const"):
        return _wrap(s)
    return s


_INFIX = {"add": "+", "sub": "-", "mul": "*", "tadd": "+", "tsub": "-", "tmul": "*"}


def _print(node, top=False):
    k, ch = node.kind, node.children
    if k == "var":
        return node.name
    if k == "one":
        return "one"
    if k == "const":
        return _num(node.value)
    if k in _INFIX:
        return f"{_operand(ch[0], 'left', k)} {_INFIX[k]} {_operand(ch[1], 'right', k)}"
    if k in ("scale", "tscale"):
        return f"{_num(node.value)} * {_operand(ch[0], 'child', k)}"
    if k == "adj":
        return f"adj({_print(ch[0])})"
    if k == "comm":
        return f"comm({_print(ch[0])}, {_print(ch[1])})"
    if k == "sigma":
        return f"sigma[{_num(node.value)}]({_print(ch[0])})"
    if k == "sharp":
        return f"sharp({_print(ch[0])})"
    if k == "re_state":
        return f"re(state({_print(ch[0])}))"
    if k == "im_state":
        return f"im(state({_print(ch[0])}))"
    if k in ("abs", "sqrt"):
        return f"{k}({_print(ch[0])})"
    if k in ("max", "min"):
        return f"{k}({', '.join(_print(c) for c in ch)})"
    if k in BINDERS:
        return f"{k} {node.name}:{node.domain}. {_print(ch[0])}"
    raise SortError(f"cannot print node kind {k!r}")


# parsing --------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[()\[\],.:+\-*@])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text):
    toks, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(len(text[:i].encode()), "a token", text[i])
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), len(text[:i].encode())))
        i = m.end()
    toks.append(_Tok("eof", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected):
        raise ParseError(self.cur.offset, expected, self.cur.text or "end of input")

    def accept(self, text):
        if self.cur.text == text and self.cur.kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.fail(repr(text))

    def number_start(self):
        return self.cur.kind == "num" or (self.cur.text == "-" and self.peek().kind == "num")

    def number(self):
        sign = -1.0 if self.accept("-") else 1.0
        if self.cur.kind != "num":
            self.fail("a number")
        v = sign * float(self.cur.text)
        self.i += 1
        return v

    def ident(self):
        if self.cur.kind != "ident" or self.cur.text in RESERVED:
            self.fail("a variable name")
        name = self.cur.text
        self.i += 1
        return name

    # reals
    def real(self):
        left = self.rprod()
        while self.cur.text in ("+", "-"):
            kind = "add" if self.cur.text == "+" else "sub"
            self.i += 1
            left = op(kind, left, self.rprod())
        return left

    def rprod(self):
        left = self.ratom()
        while self.accept("*"):
            left = op("mul", left, self.ratom())
        return left

    def ratom(self):
        t = self.cur
        if self.number_start():
            v = self.number()
            if self.accept("*"):
                return op("scale", self.ratom(), value=v)
            return const(v)
        if t.text in ("sup", "inf"):
            self.i += 1
            name = self.ident()
            self.expect(":")
            if self.cur.text not in DOMAINS:
                self.fail("S1 or Proj")
            dom = self.cur.text
            self.i += 1
            self.expect(".")
            return binder(t.text, name, dom, self.real())
        if t.text in ("max", "min"):
            self.i += 1
            self.expect("(")
            args = [self.real()]
            self.expect(",")
            args.append(self.real())
            while self.accept(","):
                args.append(self.real())
            self.expect(")")
            return op(t.text, *args)
        if t.text == "sharp":
            self.i += 1
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return op("sharp", arg)
        if t.text in ("re", "im"):
            self.i += 1
            self.expect("(")
            self.expect("state")
            self.expect("(")
            arg = self.term()
            self.expect(")")
            self.expect(")")
            return op("re_state" if t.text == "re" else "im_state", arg)
        if t.text in ("abs", "sqrt"):
            self.i += 1
            self.expect("(")
            arg = self.real()
            self.expect(")")
            return op(t.text, arg)
        if self.accept("("):
            inner = self.real()
            self.expect(")")
            return inner
        self.fail("a real-valued expression")

    # terms
    def term(self):
        left = self.tprod()
        while self.cur.text in ("+", "-"):
            kind = "tadd" if self.cur.text == "+" else "tsub"
            self.i += 1
            left = op(kind, left, self.tprod())
        return left

    def tprod(self):
        left = self.tatom()
        while self.accept("*"):
            left = op("tmul", left, self.tatom())
        return left

    def tatom(self):
        t = self.cur
        if self.number_start():
            v = self.number()
            self.expect("*")
            return op("tscale", self.tatom(), value=v)
        if t.text == "one":
            self.i += 1
            return one()
        if t.text == "adj":
            self.i += 1
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return op("adj", arg)
        if t.text == "comm":
            self.i += 1
            self.expect("(")
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(")")
            return op("comm", a, b)
        if t.text == "sigma":
            self.i += 1
            self.expect("[")
            tv = self.number()
            self.expect("]")
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return op("sigma", arg, value=tv)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            return var(self.ident())
        self.fail("a term")

    def builtin(self):
        self.expect("@")
        if self.cur.kind != "ident":
            self.fail("a built-in name")
        name = self.cur.text
        self.i += 1
        args = []
        if self.accept("("):
            args.append(self.number())
            self.expect(")")
        try:
            return library(name, *args)
        except (KeyError, TypeError):
            raise ParseError(self.toks[self.i - 1].offset, "a known built-in (@chi_factor, @phi_t(T), @theta)", name)


def parse(text: str) -> Node:
    p = _Parser(text)
    node = p.builtin() if p.cur.text == "@" else p.real()
    if p.cur.kind != "eof":
        p.fail("end of input")
    return node


# built-in sentences ---------------------------------------------------------

XI_CENTERED = ("sqrt(sharp(x) * sharp(x) - re(state(x)) * re(state(x)) "
               "- im(state(x)) * im(state(x)))")
XI_LITERAL = ("sqrt(max(0, sharp(x) * sharp(x) - re(state(x)) * re(state(x)) "
            "+ im(state(x)) * im(state(x))))")
BETA = "sup y:S1. sharp(comm(x, y))"
CHI_FACTOR = f"sup x:S1. max(0, {XI_CENTERED} - {BETA})"
THETA = "inf x:S1. sup p:Proj. max(0, min(sharp(p), sharp(one - p)) - sharp(x * p - p * x))"


def phi_t_text(t: float) -> str:
    return f"sup x:S1. sharp(sigma[{_num(t)}](x) - x)"


def library(name: str, *args) -> Node:
    """Built-in sentences by name: ``chi_factor``, ``phi_t`` (takes ``t``), ``theta``."""
    if name == "chi_factor" and not args:
        return parse(CHI_FACTOR)
    if name == "phi_t" and len(args) == 1:
        return parse(phi_t_text(args[0]))
    if name == "theta" and not args:
        return parse(THETA)
    raise KeyError(name)
