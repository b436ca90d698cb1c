"""Statement extraction, normalization into macro-variable equations, and
unique-feature filtering."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..syntax import looks_declaration
from .expr import (ASSIGN_OPS, CallAtom, VarContext, normalize_tokens, render,
                   variables)
from .lexer import Token, TokenKind, lex_lines


class StatementKind(str, enum.Enum):
    CONDITIONAL = "Conditional"
    ASSIGNMENT = "Assignment"
    RETURN = "Return"
    FUNCTION_CALL = "FunctionCall"


@dataclass(frozen=True)
class StatementUnit:
    kind: StatementKind
    tokens: tuple[Token, ...]
    source_line: int


@dataclass(frozen=True)
class AssignEq:
    op: str
    target: object
    value: object


@dataclass(frozen=True)
class ReturnEq:
    value: object | None


@dataclass(frozen=True)
class NormalizedEquation:
    kind: StatementKind
    expr: object
    var_origin: dict = field(hash=False, compare=False)
    canonical: str = ""
    source_line: int = 0

    @property
    def key(self):
        return (self.kind, self.canonical)

    def to_dict(self):
        return {"kind": self.kind.value, "canonical": self.canonical,
                "line": self.source_line, "vars": dict(self.var_origin)}


def render_equation(kind: StatementKind, expr) -> str:
    if kind is StatementKind.ASSIGNMENT:
        return f"{render(expr.target)} {expr.op} {render(expr.value)}"
    if kind is StatementKind.RETURN:
        return "return" if expr.value is None else f"return {render(expr.value)}"
    return render(expr)


# ------------------------------------------------------------ extraction

_SKIP_KEYWORDS = frozenset(("else", "do"))
_JUMP_KEYWORDS = frozenset(("goto", "break", "continue"))


def _match_paren(toks, i) -> int:
    """Index of the ')' closing the '(' at toks[i]; len(toks) if unbalanced."""
    depth = 0
    for j in range(i, len(toks)):
        lx = toks[j][1].lexeme
        if lx == "(":
            depth += 1
        elif lx == ")":
            depth -= 1
            if depth == 0:
                return j
    return len(toks)


def _stream(lines, start):
    out = []
    for off, toks in enumerate(lex_lines(lines)):
        if lines[off].lstrip().startswith("#"):
            continue
        out.extend((start + off, t) for t in toks if t.kind is not TokenKind.COMMENT)
    return out


def extract_statements(lines, start: int = 1) -> list[StatementUnit]:
    """Classify statements of consecutive `lines` (first line numbered `start`)."""
    toks = _stream(list(lines), start)
    units: list[StatementUnit] = []
    i = 0
    n = len(toks)
    while i < n:
        line, t = toks[i]
        lx = t.lexeme
        if lx in ("{", "}", ";") or lx in _SKIP_KEYWORDS:
            i += 1
            continue
        if lx in ("if", "while", "switch") and i + 1 < n and toks[i + 1][1].lexeme == "(":
            close = _match_paren(toks, i + 1)
            cond = tuple(tk for _, tk in toks[i + 2:close])
            if cond:
                units.append(StatementUnit(StatementKind.CONDITIONAL, cond, line))
            i = close + 1
            continue
        if lx == "for" and i + 1 < n and toks[i + 1][1].lexeme == "(":
            close = _match_paren(toks, i + 1)
            parts = _split_top(toks[i + 2:close], ";")
            if len(parts) >= 2 and parts[1]:
                units.append(StatementUnit(StatementKind.CONDITIONAL,
                                           tuple(tk for _, tk in parts[1]), parts[1][0][0]))
            i = close + 1
            continue
        if lx in ("case", "default") or (t.kind is TokenKind.IDENTIFIER and i + 1 < n
                                         and toks[i + 1][1].lexeme == ":"):
            while i < n and toks[i][1].lexeme != ":":
                i += 1
            i += 1
            continue
        # simple statement up to the next top-level ';'
        j = i
        depth = 0
        while j < n:
            l2 = toks[j][1].lexeme
            if l2 in ("(", "["):
                depth += 1
            elif l2 in (")", "]"):
                depth -= 1
            elif depth <= 0 and l2 in (";", "{", "}"):
                break
            j += 1
        stmt = [tk for _, tk in toks[i:j]]
        i = j + 1 if j < n and toks[j][1].lexeme == ";" else max(j, i + 1)
        unit = _classify(stmt, line)
        if unit is not None:
            units.append(unit)
    return units


def _split_top(toks, sep):
    parts, cur, depth = [], [], 0
    for item in toks:
        lx = item[1].lexeme
        if lx in ("(", "["):
            depth += 1
        elif lx in (")", "]"):
            depth -= 1
        if lx == sep and depth == 0:
            parts.append(cur)
            cur = []
        else:
            cur.append(item)
    parts.append(cur)
    return parts


def _top_assign(stmt) -> int | None:
    depth = 0
    for k, t in enumerate(stmt):
        if t.lexeme in ("(", "["):
            depth += 1
        elif t.lexeme in (")", "]"):
            depth -= 1
        elif depth == 0 and t.lexeme in ASSIGN_OPS:
            return k
    return None


def _classify(stmt: list[Token], line: int) -> StatementUnit | None:
    if not stmt:
        return None
    first = stmt[0].lexeme
    if first == "return":
        return StatementUnit(StatementKind.RETURN, tuple(stmt[1:]), line)
    if first in _JUMP_KEYWORDS:
        return None
    if _top_assign(stmt) is not None:
        return StatementUnit(StatementKind.ASSIGNMENT, tuple(stmt), line)
    if looks_declaration(stmt):
        return None
    if (stmt[0].kind is TokenKind.IDENTIFIER and len(stmt) >= 3 and stmt[1].lexeme == "("
            and stmt[-1].lexeme == ")"):
        depth = 0
        for k, t in enumerate(stmt[1:], start=1):
            if t.lexeme == "(":
                depth += 1
            elif t.lexeme == ")":
                depth -= 1
                if depth == 0:
                    if k == len(stmt) - 1:
                        return StatementUnit(StatementKind.FUNCTION_CALL, tuple(stmt), line)
                    break
    return None


# ---------------------------------------------------------- normalization

def normalize_statement(unit: StatementUnit, ctx: VarContext | None = None) -> NormalizedEquation | None:
    ctx = ctx or VarContext()
    kind = unit.kind
    toks = list(unit.tokens)
    if kind is StatementKind.ASSIGNMENT:
        k = _top_assign(toks)
        lhs = toks[:k]
        if looks_declaration(lhs) and len(lhs) > 1:
            # `int *x = ...` declares x; the type is not part of the equation
            lhs = [t for t in lhs if t.kind is TokenKind.IDENTIFIER][-1:]
        target = normalize_tokens(lhs, ctx)
        value = normalize_tokens(toks[k + 1:], ctx)
        if target is None or value is None:
            return None
        expr = AssignEq(toks[k].lexeme, target, value)
    elif kind is StatementKind.RETURN:
        expr = ReturnEq(normalize_tokens(toks, ctx))
    else:
        expr = normalize_tokens(toks, ctx)
        if expr is None:
            return None
        if kind is StatementKind.FUNCTION_CALL and not isinstance(expr, CallAtom):
            return None
    canonical = render_equation(kind, expr)
    used = {f"x{i}" for i in _all_vars(expr)}
    origin = {k: v for k, v in ctx.origin.items() if k in used}
    return NormalizedEquation(kind, expr, origin, canonical, unit.source_line)


def _all_vars(expr):
    if isinstance(expr, AssignEq):
        return variables(expr.target) + variables(expr.value)
    if isinstance(expr, ReturnEq):
        return variables(expr.value) if expr.value is not None else []
    return variables(expr)


def normalize_text(text: str, kind: StatementKind = StatementKind.CONDITIONAL) -> NormalizedEquation | None:
    """Normalize a bare expression (for conditionals) or a statement string."""
    from .lexer import lex_line
    toks = lex_line(text)
    if kind is StatementKind.CONDITIONAL:
        return normalize_statement(StatementUnit(kind, tuple(toks), 0))
    units = extract_statements([text])
    units = [u for u in units if u.kind is kind] or [StatementUnit(kind, tuple(toks), 0)]
    return normalize_statement(units[0])


def _wrapped(toks) -> bool:
    """True when one paren pair encloses the whole token list."""
    if len(toks) < 2 or toks[0].lexeme != "(" or toks[-1].lexeme != ")":
        return False
    depth = 0
    for k, t in enumerate(toks):
        if t.lexeme == "(":
            depth += 1
        elif t.lexeme == ")":
            depth -= 1
            if depth == 0 and k != len(toks) - 1:
                return False
    return True


def split_condition(tokens) -> list[tuple]:
    """Atomic conditions of a condition, split at top-level && and ||."""
    toks = list(tokens)
    while _wrapped(toks):
        toks = toks[1:-1]
    parts, cur, depth = [], [], 0
    for t in toks:
        if t.lexeme in ("(", "["):
            depth += 1
        elif t.lexeme in (")", "]"):
            depth -= 1
        if depth == 0 and t.lexeme in ("&&", "||"):
            parts.append(cur)
            cur = []
        else:
            cur.append(t)
    parts.append(cur)
    if len(parts) == 1:
        return [tuple(toks)] if toks else []
    return [atom for p in parts if p for atom in split_condition(p)]


def equations(lines, start: int = 1) -> list[NormalizedEquation]:
    """One fresh variable context per statement (per atomic condition)."""
    out = []
    for unit in extract_statements(lines, start):
        if unit.kind is StatementKind.CONDITIONAL:
            units = [StatementUnit(unit.kind, atom, unit.source_line)
                     for atom in split_condition(unit.tokens)]
        else:
            units = [unit]
        for u in units:
            eq = normalize_statement(u)
            if eq is not None:
                out.append(eq)
    return out


TRIVIAL_CONDITIONS = frozenset(("x1 == 0", "0 == x1", "x1 != 0", "0 != x1", "!x1", "x1"))


def is_trivial(eq: NormalizedEquation) -> bool:
    return eq.kind is StatementKind.CONDITIONAL and eq.canonical in TRIVIAL_CONDITIONS


def unique_equations(version_a, version_b) -> list[NormalizedEquation]:
    """Equations of `version_a` whose canonical form never occurs in `version_b`."""
    other = {e.key for e in version_b}
    seen = set()
    out = []
    for e in version_a:
        if e.key in other or e.key in seen or is_trivial(e):
            continue
        seen.add(e.key)
        out.append(e)
    return out
