"""Patch enhancement: grow the raw patch lines into a context slice using
intra-function data flow, control flow, and macro resolution."""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NoPatchLines
from .source_model import AnnotatedFunction, Version
from .syntax import SyntaxNode, enclosing, looks_declaration, parent_map
from .verify.lexer import Token, TokenKind, code_tokens, lex_line, lex_lines

log = logging.getLogger(__name__)

MACRO_RE = re.compile(r"^[A-Z][A-Z0-9_]{2,}$")
CONTROL_KINDS = ("if", "else", "loop", "switch")
# all-caps names that are language-level constants, never project macros
BUILTIN_CONSTANTS = frozenset(("NULL", "EOF", "TRUE", "FALSE"))


@dataclass(frozen=True)
class VariableSet:
    defined: frozenset = frozenset()
    used: frozenset = frozenset()

    @property
    def all(self) -> frozenset:
        return self.defined | self.used


def _is_variable(tok: Token, nxt: Token | None) -> bool:
    if tok.kind is not TokenKind.IDENTIFIER:
        return False
    if nxt is not None and nxt.lexeme == "(":
        return False  # call position
    return not MACRO_RE.match(tok.lexeme)


def _lvalue_chain(toks, end) -> tuple[set[int], int]:
    """Token indices forming the lvalue that ends at toks[end]; bracket contents excluded."""
    chain = set()
    k = end
    while k >= 0:
        t = toks[k]
        if t.lexeme == "]":
            depth = 0
            while k >= 0:
                if toks[k].lexeme == "]":
                    depth += 1
                elif toks[k].lexeme == "[":
                    depth -= 1
                    if depth == 0:
                        break
                k -= 1
            k -= 1
            continue
        if t.kind is TokenKind.IDENTIFIER:
            chain.add(k)
            if k >= 1 and toks[k - 1].lexeme in ("->", "."):
                k -= 2
                continue
        break
    return chain, k


def variables_of_tokens(tokens: list[Token]) -> VariableSet:
    toks = code_tokens(tokens)
    defined_idx: set[int] = set()
    skip: set[int] = set()
    # declarations: leading type tokens are not variables, the declarator is defined
    for stmt_lo, stmt_hi in _statements(toks):
        piece = toks[stmt_lo:stmt_hi]
        if piece and looks_declaration(piece):
            for k in range(stmt_lo, stmt_hi):
                lx = toks[k].lexeme
                if lx in ("=", ";", ",", "[", ")") or k == stmt_hi - 1:
                    j = k if lx not in ("=", ";", ",", "[", ")") else k - 1
                    while j >= stmt_lo and toks[j].kind is not TokenKind.IDENTIFIER:
                        j -= 1
                    if j >= stmt_lo:
                        defined_idx.add(j)
                        skip.update(range(stmt_lo, j))
                    break
    for k, t in enumerate(toks):
        if t.kind is TokenKind.OPERATOR and t.lexeme in (
                "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="):
            chain, _ = _lvalue_chain(toks, k - 1)
            defined_idx |= chain
        elif t.lexeme in ("++", "--"):
            if k + 1 < len(toks) and toks[k + 1].kind is TokenKind.IDENTIFIER:
                defined_idx.add(k + 1)
            if k >= 1:
                chain, _ = _lvalue_chain(toks, k - 1)
                defined_idx |= chain
    defined, used = set(), set()
    for k, t in enumerate(toks):
        nxt = toks[k + 1] if k + 1 < len(toks) else None
        if k in skip or not _is_variable(t, nxt):
            continue
        (defined if k in defined_idx else used).add(t.lexeme)
    return VariableSet(frozenset(defined), frozenset(used))


def _statements(toks):
    lo = 0
    for k, t in enumerate(toks):
        if t.lexeme == ";":
            yield lo, k + 1
            lo = k + 1
    if lo < len(toks):
        yield lo, len(toks)


def collect_patch_variables(func: AnnotatedFunction) -> VariableSet:
    if not func.patch_lines:
        raise NoPatchLines(f"{func.name}: no patch lines")
    defined, used = set(), set()
    for idx in func.patch_lines:
        vs = variables_of_tokens(lex_line(func.text_of(idx)))
        defined |= vs.defined
        used |= vs.used
    return VariableSet(frozenset(defined), frozenset(used))


def dataflow_slice(func: AnnotatedFunction, vars: VariableSet) -> set[int]:
    names = vars.all
    if not names:
        return set()
    patch = set(func.patch_lines)
    out = set()
    for ln, toks in zip(func.lines, lex_lines(func.texts)):
        if ln.index in patch:
            continue
        if any(t.kind is TokenKind.IDENTIFIER and t.lexeme in names for t in toks):
            out.add(ln.index)
    return out


def _first_statement(node: SyntaxNode | None) -> int | None:
    if node is None:
        return None
    if node.kind == "block":
        return node.children[0].head if node.children else None
    return node.head


def _body(node: SyntaxNode) -> SyntaxNode | None:
    for c in node.children:
        if c.kind != "else":
            return c
    return None


def controlflow_slice(func: AnnotatedFunction) -> set[int]:
    root = func.syntax
    parents = parent_map(root)
    patch = set(func.patch_lines)
    out: set[int] = set()
    for line in sorted(patch):
        for node in enclosing(root, line):
            if node.kind == "block":
                first = _first_statement(node)
                if first is not None:
                    out.add(first)
                continue
            if node.kind not in CONTROL_KINDS:
                continue
            out.add(node.head)
            first = _first_statement(_body(node))
            if first is not None:
                out.add(first)
            if node.kind == "if":
                els = next((c for c in node.children if c.kind == "else"), None)
                if els is not None and not els.contains(line):
                    out.add(els.head)
                    first = _first_statement(_body(els))
                    if first is not None:
                        out.add(first)
            if node.kind != "else":
                parent = parents.get(id(node), root)
                sibs = parent.children
                k = next(i for i, c in enumerate(sibs) if c is node)
                if k + 1 < len(sibs):
                    out.add(sibs[k + 1].head)
    n = len(func.lines)
    return {i for i in out if 1 <= i <= n and i not in patch}


# ------------------------------------------------------------------ macros

@dataclass(frozen=True)
class MacroDef:
    name: str
    params: tuple[str, ...] | None
    body: str
    path: str
    line: int


# the parameter list must touch the name: "#define F (x)" is object-like
_DEFINE_RE = re.compile(r"^\s*#\s*define\s+([A-Za-z_]\w*)(\(([^)]*)\))?(.*)$")


def _strip_comment(text: str) -> str:
    toks = lex_line(text)
    cut = next((t.column for t in toks if t.kind is TokenKind.COMMENT), None)
    return (text if cut is None else text[:cut]).strip()


class ProjectIndex:
    """Read-only index of `#define`s under a source tree.

    Built eagerly, so concurrent lookups need no locking.
    """

    def __init__(self, root, globs=("*.c", "*.h")):
        self.root = Path(root)
        self.globs = tuple(globs)
        self.defs: dict[str, list[MacroDef]] = {}
        self._build()

    def _files(self):
        seen = set()
        for g in self.globs:
            for p in sorted(self.root.rglob(g)):
                if p.is_file() and p not in seen:
                    seen.add(p)
                    yield p

    def _build(self):
        for path in self._files():
            try:
                lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
            except OSError as exc:
                log.warning("cannot read %s: %s", path, exc)
                continue
            i = 0
            while i < len(lines):
                start = i
                text = lines[i]
                while text.endswith("\\") and i + 1 < len(lines):
                    i += 1
                    text = text[:-1] + " " + lines[i]
                i += 1
                m = _DEFINE_RE.match(text)
                if not m:
                    continue
                name, has_params, params, body = m.groups()
                plist = tuple(p.strip() for p in params.split(",") if p.strip()) if has_params else None
                self.defs.setdefault(name, []).append(
                    MacroDef(name, plist, _strip_comment(body), str(path), start + 1))

    def lookup(self, name: str) -> list[MacroDef]:
        return list(self.defs.get(name, ()))

    def search(self, pattern: str) -> list[tuple[str, int, str]]:
        """Plain text search across indexed files: (path, line, text)."""
        rx = re.compile(pattern)
        hits = []
        for path in self._files():
            for n, line in enumerate(path.read_text(encoding="utf-8", errors="replace").splitlines(), 1):
                if rx.search(line):
                    hits.append((str(path), n, line))
        return hits


def _path_distance(a: str, b: str) -> int:
    pa, pb = Path(os.path.abspath(a)).parent.parts, Path(os.path.abspath(b)).parent.parts
    common = 0
    for x, y in zip(pa, pb):
        if x != y:
            break
        common += 1
    return len(pa) + len(pb) - 2 * common


def _choose(defs: list[MacroDef], source_path: str) -> MacroDef:
    def rank(d: MacroDef):
        if source_path:
            same_file = os.path.abspath(d.path) == os.path.abspath(source_path)
            same_dir = os.path.dirname(os.path.abspath(d.path)) == os.path.dirname(os.path.abspath(source_path))
            tier = 0 if same_file else 1 if same_dir else 2
            dist = _path_distance(d.path, source_path)
        else:
            tier, dist = 2, 0
        return (tier, dist, d.path, d.line)
    return min(defs, key=rank)


_NON_EXPR = frozenset(("do", "while", "if", "for", "return", "switch", "goto"))


def _single_expression(body: str) -> bool:
    toks = lex_line(body)
    if not toks:
        return False
    return not any(t.lexeme in (";", "{", "}", "#", "##") or t.lexeme in _NON_EXPR for t in toks)


@dataclass(frozen=True)
class MacroTable:
    values: dict = field(default_factory=dict)     # name -> replacement text
    params: dict = field(default_factory=dict)     # name -> parameter tuple (function-like)
    sources: dict = field(default_factory=dict)    # name -> "path:line"
    unresolved: tuple = ()

    def to_dict(self):
        return {"values": dict(self.values), "sources": dict(self.sources),
                "unresolved": list(self.unresolved)}


def macro_candidates(lines) -> list[str]:
    out = []
    for toks in lex_lines(list(lines)):
        for t in toks:
            if (t.kind is TokenKind.IDENTIFIER and MACRO_RE.match(t.lexeme)
                    and t.lexeme not in BUILTIN_CONSTANTS and t.lexeme not in out):
                out.append(t.lexeme)
    return out


def resolve_macros(func: AnnotatedFunction, project_index: ProjectIndex, lines=None) -> MacroTable:
    """Resolve macro-like identifiers on `lines` (default: the patch lines)."""
    idxs = func.patch_lines if lines is None else sorted(lines)
    texts = [func.text_of(i) for i in idxs]
    values, params, sources, unresolved = {}, {}, {}, []

    def resolve(name, depth, stack):
        if name in values:
            return True
        defs = project_index.lookup(name)
        if not defs or depth > 8 or name in stack:
            return False
        d = _choose(defs, func.source_path)
        if not d.body:
            return False
        if d.params is not None and not _single_expression(d.body):
            return False
        body = d.body
        # expand nested object-like macros inside the value
        for inner in macro_candidates([body]):
            if inner != name and inner not in (d.params or ()) and resolve(inner, depth + 1, stack | {name}):
                if inner not in params:
                    body = _replace_identifier(body, inner, values[inner])
        values[name] = body
        if d.params is not None:
            params[name] = d.params
        sources[name] = f"{d.path}:{d.line}"
        if len(defs) > 1:
            log.info("macro %s has %d definitions; chose %s", name, len(defs), sources[name])
        return True

    for name in macro_candidates(texts):
        if not resolve(name, 0, frozenset()):
            unresolved.append(name)
    return MacroTable(values, params, sources, tuple(unresolved))


def _replace_identifier(text: str, name: str, value: str) -> str:
    toks = lex_line(text)
    for t in reversed(toks):
        if t.kind is TokenKind.IDENTIFIER and t.lexeme == name:
            text = text[:t.column] + value + text[t.column + len(name):]
    return text


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, ""
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            args.append(cur.strip())
            cur = ""
        else:
            cur += ch
    args.append(cur.strip())
    return args


def apply_macros(text: str, table: MacroTable) -> str:
    """Substitute resolved macros in one line of code (never inside strings/comments)."""
    if not table.values:
        return text
    toks = lex_line(text)
    edits = []  # (start, end, replacement)
    k = 0
    while k < len(toks):
        t = toks[k]
        if t.kind is TokenKind.IDENTIFIER and t.lexeme in table.values:
            if t.lexeme in table.params:
                if k + 1 < len(toks) and toks[k + 1].lexeme == "(":
                    depth, j = 0, k + 1
                    while j < len(toks):
                        if toks[j].lexeme == "(":
                            depth += 1
                        elif toks[j].lexeme == ")":
                            depth -= 1
                            if depth == 0:
                                break
                        j += 1
                    if j < len(toks):
                        inner = text[toks[k + 1].column + 1:toks[j].column]
                        args = [apply_macros(a, table) for a in _split_args(inner)] if inner.strip() else []
                        body = table.values[t.lexeme]
                        for p, a in zip(table.params[t.lexeme], args):
                            body = _replace_identifier(body, p, f"({a})" if len(lex_line(a)) > 1 else a)
                        edits.append((t.column, toks[j].column + 1, f"({body})"))
                        k = j + 1
                        continue
            else:
                edits.append((t.column, t.column + len(t.lexeme), table.values[t.lexeme]))
        k += 1
    for lo, hi, rep in reversed(edits):
        text = text[:lo] + rep + text[hi:]
    return text


def substitute_function(func: AnnotatedFunction, table: MacroTable) -> AnnotatedFunction:
    return func.with_texts({ln.index: apply_macros(ln.text, table) for ln in func.lines})


# ---------------------------------------------------------------- slices

@dataclass(frozen=True)
class SliceLine:
    index: int
    text: str
    origin: str  # patch | dataflow | controlflow


@dataclass(frozen=True)
class EnhancedSlice:
    version_tag: Version
    lines: tuple[SliceLine, ...]
    macro_substitutions: dict = field(default_factory=dict)
    function: AnnotatedFunction | None = field(default=None, compare=False, repr=False)
    macros: MacroTable = field(default_factory=MacroTable, compare=False, repr=False)

    @property
    def line_numbers(self) -> list[int]:
        return [ln.index for ln in self.lines]

    @property
    def patch_line_numbers(self) -> list[int]:
        return [ln.index for ln in self.lines if ln.origin == "patch"]

    def __len__(self):
        return len(self.lines)

    def to_dict(self):
        return {"version": self.version_tag.value,
                "lines": [{"line": ln.index, "text": ln.text, "origin": ln.origin} for ln in self.lines],
                "macros": dict(self.macro_substitutions)}


def build_enhanced_slice(func: AnnotatedFunction, df, cf, macros) -> EnhancedSlice:
    table = macros if isinstance(macros, MacroTable) else MacroTable(dict(macros))
    origin: dict[int, str] = {}
    for i in func.patch_lines:
        origin[i] = "patch"
    for i in sorted(df):
        origin.setdefault(i, "dataflow")
    for i in sorted(cf):
        origin.setdefault(i, "controlflow")
    n = len(func.lines)
    lines = tuple(SliceLine(i, apply_macros(func.text_of(i), table), origin[i])
                  for i in sorted(origin) if 1 <= i <= n)
    return EnhancedSlice(func.version_tag, lines, dict(table.values), func, table)


def enhance(func: AnnotatedFunction, project_index: ProjectIndex | None) -> EnhancedSlice:
    """Full enhancement of one annotated function version."""
    if not func.patch_lines:
        return EnhancedSlice(func.version_tag, (), {}, func)
    vars_ = collect_patch_variables(func)
    df = dataflow_slice(func, vars_)
    cf = controlflow_slice(func)
    if project_index is not None:
        table = resolve_macros(func, project_index, set(func.patch_lines) | df | cf)
    else:
        table = MacroTable(unresolved=tuple(macro_candidates(func.text_of(i) for i in func.patch_lines)))
    return build_enhanced_slice(func, df, cf, table)
