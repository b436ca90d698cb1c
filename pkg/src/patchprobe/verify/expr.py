"""C expression parsing and the normalized expression tree.

Raw parse trees keep their token range so that any subtree the normalizer
cannot represent becomes a macro variable keyed by its source text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .lexer import TYPE_KEYWORDS, Token, TokenKind, lex_line

BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7, "<<": 8, ">>": 8,
    "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
UNARY_OPS = ("!", "~", "-")
COMPARISONS = frozenset(("==", "!=", "<", "<=", ">", ">="))
ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>=".split())

_KNOWN_TYPE_RE = re.compile(
    r"^(?:__int\d+|_?_?u?int\d*_t|s?size_t|ptrdiff_t|uintptr_t|intptr_t|char\d*_t|"
    r"_(?:BYTE|WORD|DWORD|QWORD|OWORD|BOOL\d?|UNKNOWN)|BYTE|WORD|DWORD|QWORD|BOOL|"
    r"u?char|u?short|uint|ulong|LONG|ULONG|UINT|bool|[a-z_]\w*_t)$"
)


# ---------------------------------------------------------------- raw trees

@dataclass
class Raw:
    kind: str  # const name paren unary binary call index member cast ternary assign postfix opaque
    lo: int
    hi: int
    op: str = ""
    kids: tuple = ()
    value: int | None = None
    text: str = ""


class ParseError(Exception):
    pass


class ExprParser:
    def __init__(self, tokens: list[Token]):
        self.toks = [t for t in tokens if t.kind is not TokenKind.COMMENT]
        self.i = 0

    def text(self, lo, hi) -> str:
        """Source spelling of toks[lo:hi]; a space only where the input had a gap."""
        out = []
        prev = None
        for t in self.toks[lo:hi]:
            if prev is not None and t.column != prev.column + len(prev.lexeme):
                out.append(" ")
            out.append(t.lexeme)
            prev = t
        return "".join(out)

    def peek(self, k=0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def lx(self, k=0):
        t = self.peek(k)
        return t.lexeme if t is not None else None

    def expect(self, lexeme):
        if self.lx() != lexeme:
            raise ParseError(f"expected {lexeme!r} at {self.i}, got {self.lx()!r}")
        self.i += 1

    def parse(self) -> Raw:
        node = self.comma()
        if self.i != len(self.toks):
            raise ParseError(f"trailing tokens at {self.i}")
        return node

    def comma(self) -> Raw:
        lo = self.i
        node = self.assign()
        while self.lx() == ",":
            self.i += 1
            rhs = self.assign()
            node = Raw("binary", lo, self.i, ",", (node, rhs))
        return node

    def assign(self) -> Raw:
        lo = self.i
        lhs = self.ternary()
        if self.lx() in ASSIGN_OPS:
            op = self.lx()
            self.i += 1
            rhs = self.assign()
            return Raw("assign", lo, self.i, op, (lhs, rhs))
        return lhs

    def ternary(self) -> Raw:
        lo = self.i
        cond = self.binary(1)
        if self.lx() == "?":
            self.i += 1
            a = self.comma()
            self.expect(":")
            b = self.assign()
            return Raw("ternary", lo, self.i, "?", (cond, a, b))
        return cond

    def binary(self, min_prec) -> Raw:
        lo = self.i
        lhs = self.unary()
        while True:
            t = self.peek()
            if t is None or t.kind is not TokenKind.OPERATOR:
                return lhs
            prec = BINARY_PREC.get(t.lexeme)
            if prec is None or prec < min_prec:
                return lhs
            self.i += 1
            rhs = self.binary(prec + 1)
            lhs = Raw("binary", lo, self.i, t.lexeme, (lhs, rhs))

    def unary(self) -> Raw:
        lo = self.i
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end")
        if t.lexeme in ("!", "~", "-", "+", "*", "&", "++", "--") and t.kind is TokenKind.OPERATOR:
            self.i += 1
            operand = self.unary()
            return Raw("unary", lo, self.i, t.lexeme, (operand,))
        if t.lexeme == "sizeof":
            self.i += 1
            if self.lx() == "(" and self._cast_ahead():
                self._skip_group()
            else:
                self.unary()
            return Raw("opaque", lo, self.i, "sizeof")
        if t.lexeme == "(" and self._cast_ahead():
            self._skip_group()
            operand = self.unary()
            return Raw("cast", lo, self.i, "cast", (operand,))
        return self.postfix()

    def _skip_group(self):
        depth = 0
        while self.i < len(self.toks):
            lx = self.toks[self.i].lexeme
            self.i += 1
            if lx == "(":
                depth += 1
            elif lx == ")":
                depth -= 1
                if depth == 0:
                    return
        raise ParseError("unbalanced parentheses")

    def _cast_ahead(self) -> bool:
        """Does the '(' at the cursor open a type name?"""
        j = self.i + 1
        inner = []
        while j < len(self.toks) and self.toks[j].lexeme != ")":
            inner.append(self.toks[j])
            j += 1
        if not inner or j >= len(self.toks):
            return False
        if any(t.kind not in (TokenKind.IDENTIFIER, TokenKind.KEYWORD)
               and t.lexeme not in ("*", "&") for t in inner):
            return False
        if any(t.kind is TokenKind.KEYWORD and t.lexeme not in TYPE_KEYWORDS for t in inner):
            return False
        has_type = (any(t.kind is TokenKind.KEYWORD for t in inner)
                    or inner[-1].lexeme == "*"
                    or any(_KNOWN_TYPE_RE.match(t.lexeme) for t in inner
                           if t.kind is TokenKind.IDENTIFIER))
        if not has_type:
            return False
        after = self.toks[j + 1] if j + 1 < len(self.toks) else None
        if after is None:
            return False
        if after.kind is TokenKind.OPERATOR and after.lexeme not in ("!", "~", "-", "+", "*", "&", "++", "--"):
            return False
        return after.lexeme not in (")", "]", ";", ",")

    def postfix(self) -> Raw:
        lo = self.i
        node = self.primary()
        while True:
            lx = self.lx()
            if lx == "(":
                self.i += 1
                args = []
                if self.lx() != ")":
                    args.append(self.assign())
                    while self.lx() == ",":
                        self.i += 1
                        args.append(self.assign())
                self.expect(")")
                node = Raw("call", lo, self.i, "call", (node, *args))
            elif lx == "[":
                self.i += 1
                idx = self.comma()
                self.expect("]")
                node = Raw("index", lo, self.i, "[]", (node, idx))
            elif lx in ("->", "."):
                self.i += 1
                t = self.peek()
                if t is None or t.kind is not TokenKind.IDENTIFIER:
                    raise ParseError("member name expected")
                self.i += 1
                node = Raw("member", lo, self.i, lx, (node,))
            elif lx in ("++", "--"):
                self.i += 1
                node = Raw("postfix", lo, self.i, lx, (node,))
            else:
                return node

    def primary(self) -> Raw:
        lo = self.i
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end")
        if t.kind in (TokenKind.INTEGER, TokenKind.CHAR):
            self.i += 1
            if t.value is None:
                return Raw("opaque", lo, self.i)
            return Raw("const", lo, self.i, value=t.value)
        if t.kind is TokenKind.FLOAT:
            self.i += 1
            return Raw("opaque", lo, self.i)
        if t.kind is TokenKind.STRING:
            while self.peek() is not None and self.peek().kind is TokenKind.STRING:
                self.i += 1
            return Raw("opaque", lo, self.i)
        if t.kind is TokenKind.IDENTIFIER:
            self.i += 1
            return Raw("name", lo, self.i, text=t.lexeme)
        if t.lexeme == "(":
            self.i += 1
            inner = self.comma()
            self.expect(")")
            return Raw("paren", lo, self.i, "()", (inner,))
        raise ParseError(f"unexpected token {t.lexeme!r}")


def parse_tokens(tokens: list[Token]) -> tuple[Raw | None, ExprParser]:
    p = ExprParser(tokens)
    if not p.toks:
        return None, p
    try:
        return p.parse(), p
    except ParseError:
        # unparseable: the whole expression becomes one atom
        return Raw("opaque", 0, len(p.toks)), p


# --------------------------------------------------------- normalized trees

@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Un:
    op: str
    operand: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class CallAtom:
    name: str
    args: tuple


_CONST_NAMES = {"NULL": 0, "nullptr": 0, "true": 1, "false": 0}


class VarContext:
    """Fresh macro-variable namespace; identical atom texts share an index."""

    def __init__(self):
        self.by_text: dict[str, int] = {}
        self.origin: dict[str, str] = {}

    def atom(self, text: str) -> Var:
        # spacing differences must not split one atom into two variables
        key = " ".join(t.lexeme for t in lex_line(text))
        idx = self.by_text.get(key)
        if idx is None:
            idx = len(self.by_text) + 1
            self.by_text[key] = idx
            self.origin[f"x{idx}"] = " ".join(text.split())
        return Var(idx)


def normalize_raw(node: Raw, p: ExprParser, ctx: VarContext):
    k = node.kind
    if k == "const":
        return Num(node.value)
    if k == "name":
        if node.text in _CONST_NAMES:
            return Num(_CONST_NAMES[node.text])
        return ctx.atom(node.text)
    if k in ("paren", "cast"):
        # casts are width/pointer bookkeeping that decompilers add freely
        return normalize_raw(node.kids[0], p, ctx)
    if k == "unary":
        if node.op in UNARY_OPS:
            return Un(node.op, normalize_raw(node.kids[0], p, ctx))
        if node.op == "+":
            return normalize_raw(node.kids[0], p, ctx)
    if k == "binary" and node.op in BINARY_PREC:
        left = normalize_raw(node.kids[0], p, ctx)
        right = normalize_raw(node.kids[1], p, ctx)
        return Bin(node.op, left, right)
    if k == "call" and node.kids[0].kind == "name":
        args = tuple(normalize_raw(a, p, ctx) for a in node.kids[1:])
        return CallAtom(node.kids[0].text, args)
    return ctx.atom(p.text(node.lo, node.hi))


def normalize_tokens(tokens: list[Token], ctx: VarContext):
    raw, p = parse_tokens(tokens)
    if raw is None:
        return None
    return normalize_raw(raw, p, ctx)


def normalize_expression_text(text: str, ctx: VarContext | None = None):
    return normalize_tokens(lex_line(text), ctx or VarContext())


# ----------------------------------------------------------------- render

_UNARY_PREC = 11
_ATOM_PREC = 12


def _prec(e) -> int:
    if isinstance(e, Bin):
        return BINARY_PREC[e.op]
    if isinstance(e, Un):
        return _UNARY_PREC
    return _ATOM_PREC


def render(e) -> str:
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, CallAtom):
        return f"{e.name}({', '.join(render(a) for a in e.args)})"
    if isinstance(e, Un):
        inner = render(e.operand)
        if _prec(e.operand) < _UNARY_PREC or (e.op == "-" and inner.startswith("-")):
            inner = f"({inner})"
        return e.op + inner
    if isinstance(e, Bin):
        p = BINARY_PREC[e.op]
        left = render(e.left)
        right = render(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not a normalized expression: {e!r}")


def variables(e) -> list[int]:
    """Distinct variable indices in first-appearance order."""
    out: list[int] = []

    def go(n):
        if isinstance(n, Var):
            if n.index not in out:
                out.append(n.index)
        elif isinstance(n, Un):
            go(n.operand)
        elif isinstance(n, Bin):
            go(n.left)
            go(n.right)
        elif isinstance(n, CallAtom):
            for a in n.args:
                go(a)

    go(e)
    return out


def call_atoms(e) -> list[CallAtom]:
    out: list[CallAtom] = []

    def go(n):
        if isinstance(n, CallAtom):
            if n not in out:
                out.append(n)
        elif isinstance(n, Un):
            go(n.operand)
        elif isinstance(n, Bin):
            go(n.left)
            go(n.right)

    go(e)
    return out
