"""Decompiled pseudocode intake plus token-bounded, structure-aligned cutting
of both pseudocode and annotated source."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import AnchorMissing, EmptyInput
from .source_model import PATCH_MARK, AnnotatedFunction
from .syntax import SyntaxNode, enclosing, parse_body
from .verify.lexer import count_tokens

DEFAULT_TOKEN_LIMIT = 3000

_NAME_RE = re.compile(r"([A-Za-z_][\w:]*)\s*\(")


@dataclass(frozen=True)
class PseudoFunction:
    name: str
    lines: tuple[str, ...]
    syntax: SyntaxNode
    fallback: bool = False  # structure came from line splitting only

    def __len__(self):
        return len(self.lines)

    def text_of(self, index: int) -> str:
        return self.lines[index - 1]

    def numbered(self, lo=1, hi=None):
        hi = len(self.lines) if hi is None else hi
        return [(i, self.lines[i - 1]) for i in range(lo, hi + 1)]


def _guess_name(lines) -> str:
    head = []
    for ln in lines:
        if "{" in ln:
            head.append(ln.split("{", 1)[0])
            break
        head.append(ln)
    names = [m for m in _NAME_RE.findall(" ".join(head)) if m not in ("__cdecl", "__fastcall", "__stdcall")]
    return names[0] if names else ""


def parse_pseudocode(text: str, name: str | None = None) -> PseudoFunction:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not any(ln.strip() for ln in lines):
        raise EmptyInput("pseudocode is empty")
    root, fallback = parse_body(lines)
    return PseudoFunction(name or _guess_name(lines), tuple(lines), root, fallback)


@dataclass(frozen=True)
class PseudoSegment:
    parent: str
    span: tuple[int, int]
    token_count: int
    lines: tuple[tuple[int, str], ...]
    over_limit: bool = False

    @property
    def start(self):
        return self.span[0]

    @property
    def end(self):
        return self.span[1]

    def contains(self, line: int) -> bool:
        return self.span[0] <= line <= self.span[1]


def _tiles(node: SyntaxNode, lo: int, hi: int) -> list[tuple[int, int, SyntaxNode | None]]:
    """Split [lo, hi] into contiguous pieces, one per child of `node`.

    Lines not covered by any child (signature, braces, blank lines) are
    attached to the following piece, trailing ones to the last piece.
    """
    kids = [c for c in node.children if c.end >= lo and c.start <= hi]
    if not kids:
        return [(lo, hi, None)]
    out = []
    cur = lo
    for c in kids:
        out.append([cur, min(c.end, hi), c])
        cur = min(c.end, hi) + 1
    out[-1][1] = hi
    return [tuple(t) for t in out]


def segment_pseudocode(func: PseudoFunction, token_limit: int = DEFAULT_TOKEN_LIMIT) -> list[PseudoSegment]:
    if token_limit <= 0:
        raise ValueError("token_limit must be positive")
    n = len(func.lines)

    def cost(lo, hi):
        return count_tokens(func.lines[lo - 1:hi])

    pieces: list[tuple[int, int, bool]] = []  # (lo, hi, over_limit)

    def split(node, lo, hi):
        for a, b, child in _tiles(node, lo, hi):
            if cost(a, b) <= token_limit:
                pieces.append((a, b, False))
            elif child is not None and child.children:
                split(child, a, b)
            else:  # atomic statement larger than the limit
                pieces.append((a, b, True))

    split(func.syntax, 1, n)

    segs: list[PseudoSegment] = []
    cur = None
    for a, b, over in pieces:
        if cur is not None and not over and not cur[2] and cost(cur[0], b) <= token_limit:
            cur = (cur[0], b, False)
            continue
        if cur is not None:
            segs.append(cur)
        cur = (a, b, over)
    if cur is not None:
        segs.append(cur)
    return [PseudoSegment(func.name, (a, b), cost(a, b), tuple(func.numbered(a, b)), over)
            for a, b, over in segs]


@dataclass(frozen=True)
class TruncatedSource:
    span: tuple[int, int]
    rendered_text: str
    token_count: int
    lines: tuple[tuple[int, str], ...]  # (line number, text with marker)
    anchor: int
    over_limit: bool = False

    @property
    def marked_lines(self) -> list[int]:
        return [i for i, t in self.lines if t.endswith(PATCH_MARK)]


def _innermost_loop(chain):
    loops = [n for n in chain if n.kind == "loop"]
    return loops[-1] if loops else None


def truncate_source(func: AnnotatedFunction, token_limit: int = DEFAULT_TOKEN_LIMIT,
                    anchor: int | None = None) -> TruncatedSource:
    """Cut a window around the first patch line that fits `token_limit`.

    Expansion alternates one sibling node up, one down (up first), climbing
    to the parent once a level is exhausted.  A loop enclosing the anchor is
    always kept whole, even over the limit.
    """
    if token_limit <= 0:
        raise ValueError("token_limit must be positive")
    marks = set(func.patch_lines)
    if anchor is None:
        if not marks:
            raise AnchorMissing(f"{func.name}: no patch line to anchor on")
        anchor = min(marks)
    n = len(func.lines)
    rendered = [ln.text + (PATCH_MARK if ln.index in marks else "") for ln in func.lines]

    def cost(lo, hi):
        return count_tokens(rendered[lo - 1:hi])

    def result(lo, hi, over=False):
        return TruncatedSource((lo, hi), "\n".join(rendered[lo - 1:hi]), cost(lo, hi),
                               tuple((i, rendered[i - 1]) for i in range(lo, hi + 1)), anchor, over)

    if cost(1, n) <= token_limit:
        return result(1, n)

    chain = [func.syntax] + enclosing(func.syntax, anchor)
    loop = _innermost_loop(chain)
    core = loop if loop is not None else chain[-1]
    depth = chain.index(core)
    if core is func.syntax:
        lo = hi = anchor
    else:
        lo, hi = core.start, core.end
    if cost(lo, hi) > token_limit:
        return result(lo, hi, True)

    level = depth - 1 if core is not func.syntax else 0
    up_blocked = down_blocked = False
    go_up = True
    while level >= 0:
        parent = chain[level]
        prev = [c for c in parent.children if c.end < lo]
        nxt = [c for c in parent.children if c.start > hi]
        can_up = bool(prev) and not up_blocked
        can_down = bool(nxt) and not down_blocked
        if not can_up and not can_down:
            if up_blocked or down_blocked:
                break
            # level exhausted: take the parent's own header/footer lines
            if cost(parent.start, parent.end) > token_limit:
                break
            lo, hi = parent.start, parent.end
            level -= 1
            continue
        if (go_up and can_up) or not can_down:
            if cost(prev[-1].start, hi) <= token_limit:
                lo = prev[-1].start
            else:
                up_blocked = True
        else:
            if cost(lo, nxt[0].end) <= token_limit:
                hi = nxt[0].end
            else:
                down_blocked = True
        go_up = not go_up
    return result(lo, hi)
