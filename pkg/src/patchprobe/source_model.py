"""Unified diffs and C functions as line-indexed, syntax-aware objects."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace

from .errors import (EmptyPatch, FunctionNotFound, MalformedDiff, MultiFileDiff,
                     PatchLineNotFound, UnbalancedBraces)
from .syntax import SyntaxNode, brace_balance, parse_body, tokenize_lines
from .verify.lexer import TokenKind, lex_lines

PATCH_MARK = " //patch_code"

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@ ?(.*)$")


class Version(str, enum.Enum):
    PRE_PATCH = "PrePatch"
    PATCHED = "Patched"


class PatchKind(str, enum.Enum):
    ADD_ONLY = "AddOnly"
    DELETE_ONLY = "DeleteOnly"
    EDIT = "Edit"


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_count: int
    new_start: int
    new_count: int
    lines: tuple[tuple[str, str], ...]  # (tag, text), tag in context|added|deleted
    header: str = ""

    def numbered(self):
        """Yield (tag, text, old_lineno, new_lineno); the absent side is None."""
        o, n = self.old_start, self.new_start
        for tag, text in self.lines:
            if tag == "context":
                yield tag, text, o, n
                o += 1
                n += 1
            elif tag == "deleted":
                yield tag, text, o, None
                o += 1
            else:
                yield tag, text, None, n
                n += 1


@dataclass(frozen=True)
class PatchDiff:
    hunks: tuple[Hunk, ...]
    file_path: str = ""
    function_hint: str | None = None
    old_path: str = ""

    def lines_with_tag(self, tag):
        return [text for h in self.hunks for t, text in h.lines if t == tag]

    @property
    def added(self):
        return self.lines_with_tag("added")

    @property
    def deleted(self):
        return self.lines_with_tag("deleted")

    def serialize(self) -> str:
        out = []
        if self.file_path:
            out.append(f"--- a/{self.old_path or self.file_path}")
            out.append(f"+++ b/{self.file_path}")
        prefix = {"context": " ", "added": "+", "deleted": "-"}
        for h in self.hunks:
            hdr = f"@@ -{h.old_start},{h.old_count} +{h.new_start},{h.new_count} @@"
            if h.header:
                hdr += " " + h.header
            out.append(hdr)
            out.extend(prefix[t] + text for t, text in h.lines)
        return "\n".join(out) + "\n"


def _strip_path(p: str) -> str:
    p = p.split("\t")[0].strip()
    if p.startswith(("a/", "b/")):
        p = p[2:]
    return p


def parse_unified_diff(text: str) -> PatchDiff:
    lines = text.splitlines()
    hunks = []
    old_path = new_path = ""
    file_sections = 0
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i]
        if line.startswith("diff --git "):
            file_sections += 1
            if file_sections > 1:
                raise MultiFileDiff("diff touches more than one file")
            i += 1
            continue
        if line.startswith("--- ") and i + 1 < n and lines[i + 1].startswith("+++ "):
            if new_path and hunks:
                raise MultiFileDiff("diff touches more than one file")
            old_path = _strip_path(line[4:])
            new_path = _strip_path(lines[i + 1][4:])
            i += 2
            continue
        if line.startswith("@@"):
            m = _HUNK_RE.match(line)
            if not m:
                raise MalformedDiff(f"bad hunk header: {line!r}")
            os_, oc, ns, nc, hint = m.groups()
            old_count = 1 if oc is None else int(oc)
            new_count = 1 if nc is None else int(nc)
            body = []
            seen_old = seen_new = 0
            i += 1
            while (seen_old < old_count or seen_new < new_count) and i < n:
                raw = lines[i]
                if raw.startswith("\\"):
                    i += 1
                    continue
                if raw.startswith("@@"):
                    break
                tag_char, content = (raw[:1], raw[1:]) if raw else (" ", "")
                if tag_char == " ":
                    body.append(("context", content))
                    seen_old += 1
                    seen_new += 1
                elif tag_char == "-":
                    body.append(("deleted", content))
                    seen_old += 1
                elif tag_char == "+":
                    body.append(("added", content))
                    seen_new += 1
                else:
                    raise MalformedDiff(f"unexpected line in hunk: {raw!r}")
                i += 1
            while i < n and lines[i].startswith("\\"):
                i += 1
            if seen_old != old_count or seen_new != new_count:
                raise MalformedDiff(
                    f"hunk -{os_},{old_count} +{ns},{new_count} has "
                    f"{seen_old} old / {seen_new} new lines")
            hunks.append(Hunk(int(os_), old_count, int(ns), new_count, tuple(body), hint.strip()))
            continue
        i += 1
    if not hunks:
        raise MalformedDiff("no hunks found")
    hint = next((h.header for h in hunks if h.header), None)
    return PatchDiff(tuple(hunks), new_path, _function_name(hint) if hint else None, old_path)


def _function_name(header: str) -> str | None:
    m = re.search(r"([A-Za-z_]\w*)\s*\(", header)
    return m.group(1) if m else header or None


def classify_patch(diff: PatchDiff) -> PatchKind:
    added = sum(1 for t in diff.added if t.strip())
    deleted = sum(1 for t in diff.deleted if t.strip())
    if added == 0 and deleted == 0:
        raise EmptyPatch("diff has no non-whitespace changes")
    if deleted == 0:
        return PatchKind.ADD_ONLY
    if added == 0:
        return PatchKind.DELETE_ONLY
    return PatchKind.EDIT


@dataclass(frozen=True)
class SourceLine:
    index: int
    text: str
    is_patch_line: bool = False


@dataclass(frozen=True)
class AnnotatedFunction:
    name: str
    lines: tuple[SourceLine, ...]
    syntax: SyntaxNode = field(repr=False)
    version_tag: Version = Version.PATCHED
    start_line: int = 1  # line number of the first function line in its file
    source_path: str = ""

    @property
    def texts(self) -> list[str]:
        return [ln.text for ln in self.lines]

    @property
    def patch_lines(self) -> list[int]:
        return [ln.index for ln in self.lines if ln.is_patch_line]

    def text_of(self, index: int) -> str:
        return self.lines[index - 1].text

    def __len__(self):
        return len(self.lines)

    def render(self, marked=None) -> str:
        """Function text with the patch marker on patch lines (or on `marked`)."""
        marked = set(self.patch_lines if marked is None else marked)
        return "\n".join(ln.text + (PATCH_MARK if ln.index in marked else "")
                         for ln in self.lines)

    def with_marks(self, indices) -> "AnnotatedFunction":
        marks = set(indices)
        return replace(self, lines=tuple(replace(ln, is_patch_line=ln.index in marks)
                                         for ln in self.lines))

    def with_texts(self, texts: dict[int, str]) -> "AnnotatedFunction":
        """Replace the text of some lines (e.g. after macro substitution).

        Line count is unchanged, so the syntax tree stays valid.
        """
        return replace(self, lines=tuple(replace(ln, text=texts.get(ln.index, ln.text))
                                         for ln in self.lines))


def _find_definition(lines: list[str], name: str) -> tuple[int, int]:
    """Locate (first_line, last_line) 0-based of `name`'s definition."""
    lexed = lex_lines(lines)
    flat = []
    for ln, toks in enumerate(lexed):
        if lines[ln].lstrip().startswith("#"):
            continue
        flat.extend((ln, t) for t in toks if t.kind is not TokenKind.COMMENT)
    depth = 0
    for k, (ln, t) in enumerate(flat):
        if t.lexeme == "{":
            depth += 1
        elif t.lexeme == "}":
            depth -= 1
        if depth != 0 or t.lexeme != name or t.kind is not TokenKind.IDENTIFIER:
            continue
        if k + 1 >= len(flat) or flat[k + 1][1].lexeme != "(":
            continue
        # skip the parameter list, then expect '{' (possibly after K&R declarations)
        j = k + 1
        pdepth = 0
        while j < len(flat):
            lx = flat[j][1].lexeme
            if lx == "(":
                pdepth += 1
            elif lx == ")":
                pdepth -= 1
                if pdepth == 0:
                    break
            j += 1
        j += 1
        while j < len(flat) and flat[j][1].lexeme not in ("{", ";", "("):
            j += 1
        if j >= len(flat) or flat[j][1].lexeme != "{":
            continue
        # walk back to the start of the declaration (return type, qualifiers)
        first = ln
        while first > 0:
            prev = lines[first - 1].strip()
            if (not prev or prev.endswith((";", "}", "{", "*/")) or prev.startswith("#")
                    or prev.startswith("//")):
                break
            first -= 1
        bdepth = 0
        for m in range(j, len(flat)):
            lx = flat[m][1].lexeme
            if lx == "{":
                bdepth += 1
            elif lx == "}":
                bdepth -= 1
                if bdepth == 0:
                    return first, flat[m][0]
        raise UnbalancedBraces(f"function {name!r} body never closes")
    raise FunctionNotFound(f"no definition of {name!r}")


def extract_function(source_text: str, name: str, version_tag: Version = Version.PATCHED,
                     source_path: str = "") -> AnnotatedFunction:
    lines = source_text.splitlines()
    first, last = _find_definition(lines, name)
    body = lines[first:last + 1]
    if not brace_balance(tokenize_lines(body)):
        raise UnbalancedBraces(f"function {name!r} has unbalanced braces")
    root, _ = parse_body(body)
    return AnnotatedFunction(
        name=name,
        lines=tuple(SourceLine(i, t) for i, t in enumerate(body, start=1)),
        syntax=root,
        version_tag=version_tag,
        start_line=first + 1,
        source_path=source_path,
    )


def collapse_ws(text: str) -> str:
    return " ".join(text.split())


def annotate_patch_lines(func: AnnotatedFunction, diff: PatchDiff) -> AnnotatedFunction:
    """Mark the function lines matching this version's side of the diff.

    Patched functions get the added lines marked, pre-patch functions the
    deleted ones.  Duplicate texts resolve to the occurrence nearest the diff's
    declared line number; each function line is used at most once.
    """
    want = "added" if func.version_tag is Version.PATCHED else "deleted"
    targets = []
    for h in diff.hunks:
        for tag, text, old_no, new_no in h.numbered():
            if tag == want and text.strip():
                targets.append((collapse_ws(text), new_no if tag == "added" else old_no))
    by_text: dict[str, list[int]] = {}
    for ln in func.lines:
        by_text.setdefault(collapse_ws(ln.text), []).append(ln.index)
    used: set[int] = set()
    marks = []
    for text, lineno in targets:
        cands = [i for i in by_text.get(text, []) if i not in used]
        if not cands:
            raise PatchLineNotFound(f"{want} line not in function {func.name!r}: {text!r}")
        pick = min(cands, key=lambda i: (abs(func.start_line + i - 1 - lineno), i))
        used.add(pick)
        marks.append(pick)
    return func.with_marks(marks)
