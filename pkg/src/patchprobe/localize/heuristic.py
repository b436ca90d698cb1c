"""Offline stand-in for the language model: token-LCS line matching and a
match-quality vote for verification.  Used for tests and as a baseline."""

from __future__ import annotations

import json
import re

from ..source_model import PATCH_MARK
from ..verify.lexer import TokenKind, code_tokens, lex_line
from ..verify.statements import equations
from .mapping import LineMapping

THRESHOLD = 0.5

_NUMBERED_RE = re.compile(r"^(\d+): ?(.*)$")


def line_signature(text: str) -> list[str]:
    """Token sequence used for similarity: normalized equations when the line
    holds a recognizable statement, otherwise raw tokens with decimal constants."""
    eqs = equations([text])
    if eqs:
        seq = []
        for e in eqs:
            seq.append(f"<{e.kind.value}>")
            seq.extend(t.lexeme for t in lex_line(e.canonical))
        return seq
    out = []
    for t in code_tokens(lex_line(text)):
        if t.kind is TokenKind.INTEGER and t.value is not None:
            out.append(str(t.value))
        else:
            out.append(t.lexeme)
    return out


def lcs_length(a, b) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def lcs_ratio(a, b) -> float:
    if not a and not b:
        return 0.0
    return 2.0 * lcs_length(a, b) / (len(a) + len(b))


def _numbered(lines):
    out = []
    for k, item in enumerate(lines, 1):
        if isinstance(item, tuple):
            out.append((int(item[0]), item[1]))
        else:
            out.append((k, item))
    return out


def heuristic_localize(slice_lines, seg_lines, threshold: float = THRESHOLD) -> LineMapping:
    """Map each query line to the most similar searched line (lowest number on ties)."""
    query = _numbered(slice_lines)
    cands = [(n, line_signature(t)) for n, t in _numbered(seg_lines)]
    pairs = {}
    for n, text in query:
        sig = line_signature(text)
        best, best_line = 0.0, None
        for m, csig in cands:
            r = lcs_ratio(sig, csig)
            if r > best:
                best, best_line = r, m
        pairs[n] = [best_line] if best_line is not None and best >= threshold else []
    return LineMapping.build(pairs, [n for n, _ in query])


def parse_numbered(block: str) -> list[tuple[int, str]]:
    out = []
    for line in block.splitlines():
        m = _NUMBERED_RE.match(line)
        if m:
            out.append((int(m.group(1)), m.group(2)))
    return out


def match_quality(entries) -> float:
    """Mean best similarity of each query line to its matched lines; unmatched count 0."""
    if not entries:
        return 0.0
    total = 0.0
    for e in entries:
        sig = line_signature(e.get("source_code", ""))
        total += max((lcs_ratio(sig, line_signature(p)) for p in e.get("pseudo_code", [])),
                     default=0.0)
    return total / len(entries)


def heuristic_answer(prompt) -> str:
    values = prompt.placeholders_filled
    if prompt.template_id.value == "Localization":
        src = parse_numbered(values["source_code"])
        query = [(n, t[:-len(PATCH_MARK)]) for n, t in src if t.endswith(PATCH_MARK)]
        pseudo = parse_numbered(values["pseudo_code"])
        return heuristic_localize(query, pseudo).serialize()
    patched = json.loads(values["patch_result_json"]).get("matches", [])
    vul = json.loads(values["vul_result_json"]).get("matches", [])
    version = "patched" if match_quality(patched) > match_quality(vul) else "pre-patch"
    return json.dumps({"version": version})
