"""Lenient line-granular syntax tree for C source and decompiler pseudocode.

The parser only recognizes the statement skeleton (blocks, if/else, loops,
switch, returns, calls, assignments, declarations).  Everything else is a
generic statement.  Spans are 1-based inclusive line ranges relative to the
first line handed to the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .verify.lexer import TYPE_KEYWORDS, Token, TokenKind, lex_lines

NODE_KINDS = ("if", "else", "loop", "switch", "block", "statement", "call",
              "return", "assignment", "declaration")

ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>=".split())


@dataclass(frozen=True)
class SyntaxNode:
    kind: str
    start: int
    end: int
    head: int = 0  # line holding the node's first token (may precede start after clamping)
    children: tuple["SyntaxNode", ...] = field(default=())

    @property
    def span(self):
        return (self.start, self.end)

    def contains(self, line: int) -> bool:
        return self.start <= line <= self.end

    def walk(self) -> Iterator["SyntaxNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def to_dict(self):
        return {"kind": self.kind, "span": [self.start, self.end], "head": self.head,
                "children": [c.to_dict() for c in self.children]}


@dataclass
class _Tok:
    line: int
    tok: Token | None  # None marks an opaque line (preprocessor or comment-only)

    @property
    def lex(self):
        return self.tok.lexeme if self.tok is not None else None


class _Node:
    """Mutable node used during parsing, frozen at the end."""

    def __init__(self, kind, start, end=None, head=None):
        self.kind = kind
        self.start = start
        self.end = start if end is None else end
        self.head = start if head is None else head
        self.children: list[_Node] = []

    def freeze(self) -> SyntaxNode:
        return SyntaxNode(self.kind, self.start, self.end, self.head,
                          tuple(c.freeze() for c in self.children))


def _is_preprocessor(line: str) -> bool:
    return line.lstrip().startswith("#")


def tokenize_lines(lines) -> list[_Tok]:
    """Flatten lines into a token stream; opaque lines become placeholder tokens."""
    lexed = lex_lines(lines)
    stream = []
    continuation = False
    for idx, (text, toks) in enumerate(zip(lines, lexed), start=1):
        if continuation or _is_preprocessor(text):
            stream.append(_Tok(idx, None))
            continuation = text.rstrip().endswith("\\")
            continue
        code = [t for t in toks if t.kind is not TokenKind.COMMENT]
        if not code:
            if toks:
                stream.append(_Tok(idx, None))
            continue
        stream.extend(_Tok(idx, t) for t in code)
    return stream


def brace_balance(stream) -> bool:
    depth = 0
    for t in stream:
        if t.lex == "{":
            depth += 1
        elif t.lex == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


class _Parser:
    def __init__(self, stream: list[_Tok]):
        self.s = stream
        self.i = 0

    # helpers
    def peek(self, k=0):
        j = self.i + k
        return self.s[j] if j < len(self.s) else None

    def lex(self, k=0):
        t = self.peek(k)
        return t.lex if t is not None else None

    def at_end(self):
        return self.i >= len(self.s)

    def skip_parens(self) -> int:
        """Consume a balanced (...) group starting at the current '('; returns last line."""
        depth = 0
        last = self.s[self.i].line
        while not self.at_end():
            t = self.s[self.i]
            self.i += 1
            last = t.line
            if t.lex == "(":
                depth += 1
            elif t.lex == ")":
                depth -= 1
                if depth == 0:
                    break
        return last

    def parse_items(self, parent: _Node, closing: bool):
        while not self.at_end():
            if closing and self.lex() == "}":
                return
            node = self.statement()
            if node is not None:
                parent.children.append(node)

    def statement(self) -> _Node | None:
        t = self.peek()
        if t.tok is None:
            self.i += 1
            return _Node("statement", t.line)
        lx = t.lex
        if lx == "{":
            return self.block()
        if lx == "if":
            return self.if_stmt()
        if lx in ("for", "while"):
            return self.loop_stmt()
        if lx == "do":
            return self.do_stmt()
        if lx == "switch":
            return self.header_stmt("switch")
        if lx == "else":
            return self.else_part()
        if lx in ("case", "default"):
            return self.label(t)
        if t.tok.kind is TokenKind.IDENTIFIER and self.lex(1) == ":":
            return self.label(t)
        if lx == "}":
            # stray closer outside any block
            self.i += 1
            return _Node("statement", t.line)
        if lx == ";":
            self.i += 1
            return None
        return self.simple()

    def block(self) -> _Node:
        start = self.peek().line
        node = _Node("block", start)
        self.i += 1
        self.parse_items(node, closing=True)
        if not self.at_end():
            node.end = self.peek().line
            self.i += 1
        else:
            node.end = self.s[-1].line
        return node

    def body(self) -> _Node | None:
        if self.at_end():
            return None
        if self.lex() == ";":
            self.i += 1
            return None
        return self.statement()

    def header_stmt(self, kind) -> _Node:
        first = self.peek()
        node = _Node(kind, first.line)
        self.i += 1
        end = first.line
        if self.lex() == "(":
            end = self.skip_parens()
        b = self.body()
        if b is not None:
            node.children.append(b)
            end = max(end, b.end)
        node.end = end
        return node

    def if_stmt(self) -> _Node:
        node = self.header_stmt("if")
        if self.lex() == "else":
            e = self.else_part()
            node.children.append(e)
            node.end = max(node.end, e.end)
        return node

    def else_part(self) -> _Node:
        t = self.peek()
        node = _Node("else", t.line)
        self.i += 1
        b = self.body()
        if b is not None:
            node.children.append(b)
            node.end = max(node.end, b.end)
        return node

    def loop_stmt(self) -> _Node:
        return self.header_stmt("loop")

    def do_stmt(self) -> _Node:
        t = self.peek()
        node = _Node("loop", t.line)
        self.i += 1
        b = self.body()
        if b is not None:
            node.children.append(b)
            node.end = b.end
        if self.lex() == "while":
            node.end = self.peek().line
            self.i += 1
            if self.lex() == "(":
                node.end = self.skip_parens()
            if self.lex() == ";":
                node.end = self.peek().line
                self.i += 1
        return node

    def label(self, t) -> _Node:
        depth = 0
        while not self.at_end():
            cur = self.peek()
            self.i += 1
            if cur.lex in ("(", "["):
                depth += 1
            elif cur.lex in (")", "]"):
                depth -= 1
            elif cur.lex == ":" and depth == 0:
                return _Node("statement", t.line, cur.line)
        return _Node("statement", t.line, self.s[-1].line)

    def simple(self) -> _Node:
        first = self.peek()
        toks: list[_Tok] = []
        depth = 0
        end = first.line
        while not self.at_end():
            cur = self.peek()
            lx = cur.lex
            if lx == "}" and depth == 0:
                break  # missing semicolon before a closing brace
            if lx == "{" and depth == 0:
                if toks and toks[-1].lex == ")" and _looks_macro_loop(toks):
                    # FOREACH(x) { ... } style macro loop
                    node = _Node("loop", first.line)
                    b = self.block()
                    node.children.append(b)
                    node.end = b.end
                    return node
                if not toks or toks[-1].lex not in ("=", ",", "(", "return"):
                    break
                # brace initializer: consume balanced
                end = self._consume_braces(toks)
                continue
            self.i += 1
            if cur.tok is None:
                end = cur.line
                continue
            toks.append(cur)
            end = cur.line
            if lx in ("(", "["):
                depth += 1
            elif lx in (")", "]"):
                depth = max(0, depth - 1)
            elif lx == ";" and depth == 0:
                break
        return _Node(classify_simple([t.tok for t in toks]), first.line, end)

    def _consume_braces(self, toks) -> int:
        depth = 0
        end = self.peek().line
        while not self.at_end():
            cur = self.peek()
            self.i += 1
            if cur.tok is not None:
                toks.append(cur)
            end = cur.line
            if cur.lex == "{":
                depth += 1
            elif cur.lex == "}":
                depth -= 1
                if depth == 0:
                    break
        return end


def _looks_macro_loop(toks) -> bool:
    return (len(toks) >= 3 and toks[0].tok.kind is TokenKind.IDENTIFIER
            and toks[1].lex == "(")


def classify_simple(tokens: list[Token]) -> str:
    lexes = [t.lexeme for t in tokens if t.lexeme != ";"]
    if not lexes:
        return "statement"
    if lexes[0] == "return":
        return "return"
    depth = 0
    assign_at = None
    for i, lx in enumerate(lexes):
        if lx in ("(", "["):
            depth += 1
        elif lx in (")", "]"):
            depth -= 1
        elif depth == 0 and lx in ASSIGN_OPS:
            assign_at = i
            break
    if looks_declaration(tokens):
        return "declaration"
    if assign_at is not None:
        return "assignment"
    if (tokens[0].kind is TokenKind.IDENTIFIER and len(lexes) >= 3 and lexes[1] == "("
            and lexes[-1] == ")" and _balanced_tail(lexes[1:])):
        return "call"
    return "statement"


def _balanced_tail(lexes) -> bool:
    depth = 0
    for i, lx in enumerate(lexes):
        if lx == "(":
            depth += 1
        elif lx == ")":
            depth -= 1
            if depth == 0:
                return i == len(lexes) - 1
    return False


def looks_declaration(tokens: list[Token]) -> bool:
    """Heuristic: leading type keyword, or `T name`, or `T *name` followed by = ; , [."""
    code = [t for t in tokens if t.kind is not TokenKind.COMMENT]
    if not code:
        return False
    if code[0].kind is TokenKind.KEYWORD and code[0].lexeme in TYPE_KEYWORDS:
        return True
    if code[0].kind is not TokenKind.IDENTIFIER:
        return False
    j = 1
    while j < len(code) and code[j].lexeme == "*":
        j += 1
    if j < len(code) and code[j].kind is TokenKind.IDENTIFIER:
        nxt = code[j + 1].lexeme if j + 1 < len(code) else ";"
        if nxt in ("=", ";", ",", "[", ")"):
            # `a * b;` also matches; harmless for slicing purposes
            return True
    return False


def _clamp(node: _Node, lo: int, hi: int) -> _Node | None:
    node.start = max(node.start, lo)
    node.end = min(node.end, hi)
    if node.start > node.end:
        return None
    kept = []
    prev_end = node.start - 1
    for c in node.children:
        c2 = _clamp(c, max(node.start, prev_end + 1), node.end)
        if c2 is None:
            continue
        kept.append(c2)
        prev_end = c2.end
    node.children = kept
    return node


def parse_body(lines: list[str]) -> tuple[SyntaxNode, bool]:
    """Parse a whole function; returns (root, fallback_used).

    Falls back to one statement node per non-blank line when braces are unbalanced.
    """
    n = len(lines)
    stream = tokenize_lines(lines)
    root = _Node("block", 1, max(n, 1))
    if not stream or not brace_balance(stream):
        root.children = [_Node("statement", i) for i, ln in enumerate(lines, 1) if ln.strip()]
        return root.freeze(), True
    p = _Parser(stream)
    # signature: everything before the first top-level '{'
    while not p.at_end() and p.lex() != "{":
        p.i += 1
    if p.at_end():
        p.i = 0
        p.parse_items(root, closing=False)
    else:
        p.i += 1
        p.parse_items(root, closing=True)
    frozen = _clamp(root, 1, max(n, 1))
    return frozen.freeze(), False


def enclosing(root: SyntaxNode, line: int) -> list[SyntaxNode]:
    """Chain of nodes containing `line`, outermost first (root excluded)."""
    chain = []
    node = root
    while True:
        nxt = next((c for c in node.children if c.contains(line)), None)
        if nxt is None:
            return chain
        chain.append(nxt)
        node = nxt


def parent_map(root: SyntaxNode) -> dict[int, SyntaxNode]:
    out = {}
    for n in root.walk():
        for c in n.children:
            out[id(c)] = n
    return out


def check_nesting(root: SyntaxNode) -> bool:
    for n in root.walk():
        prev = None
        for c in n.children:
            if not (n.start <= c.start <= c.end <= n.end):
                return False
            if prev is not None and c.start <= prev.end:
                return False
            prev = c
    return True
