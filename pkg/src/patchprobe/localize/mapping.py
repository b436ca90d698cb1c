"""Line mappings between a query slice and a searched code block."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from ..errors import OutOfRangeLines, UnparseableResponse

log = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```[a-zA-Z]*")


@dataclass(frozen=True)
class LineMapping:
    pairs: tuple[tuple[int, tuple[int, ...]], ...] = ()
    unmatched_source_lines: tuple[int, ...] = ()

    @classmethod
    def build(cls, pairs: dict, queried=None) -> "LineMapping":
        clean = {int(k): tuple(sorted(set(int(x) for x in v))) for k, v in pairs.items()}
        matched = tuple(sorted((k, v) for k, v in clean.items() if v))
        if queried is None:
            unmatched = tuple(sorted(k for k, v in clean.items() if not v))
        else:
            have = {k for k, _ in matched}
            unmatched = tuple(sorted(q for q in set(queried) if q not in have))
        return cls(matched, unmatched)

    @property
    def pseudo_lines(self) -> list[int]:
        return sorted({p for _, ps in self.pairs for p in ps})

    @property
    def coverage(self) -> int:
        return len(self.pairs)

    def as_dict(self) -> dict:
        out = {str(k): list(v) for k, v in self.pairs}
        for u in self.unmatched_source_lines:
            out[str(u)] = []
        return dict(sorted(out.items(), key=lambda kv: int(kv[0])))

    def serialize(self) -> str:
        return json.dumps(self.as_dict())

    def inverted(self) -> "LineMapping":
        inv: dict[int, set] = {}
        for s, ps in self.pairs:
            for p in ps:
                inv.setdefault(p, set()).add(s)
        return LineMapping.build(inv)


def _as_line(x) -> int | None:
    if isinstance(x, bool):
        return None
    if isinstance(x, int):
        return x
    if isinstance(x, str) and x.strip().isdigit():
        return int(x.strip())
    return None


def _expand(v) -> list[int] | None:
    if v is None:
        return []
    if not isinstance(v, list):
        v = [v]
    out = []
    for x in v:
        n = _as_line(x)
        if n is None:
            m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", str(x))
            if not m:
                return None
            lo, hi = int(m.group(1)), int(m.group(2))
            out.extend(range(lo, hi + 1))
        else:
            out.append(n)
    return out


def _as_mapping(obj):
    if not isinstance(obj, dict):
        return None
    if len(obj) == 1:
        (only,) = obj.values()
        if isinstance(only, dict) and only:
            inner = _as_mapping(only)
            if inner is not None:
                return inner
    out = {}
    for k, v in obj.items():
        key = _as_line(k)
        vals = _expand(v)
        if key is None or vals is None:
            return None
        out[key] = vals
    return out


def parse_localization_response(raw: str, span=None, queried=None) -> LineMapping:
    """First mapping object found in `raw`; prose and code fences are ignored.

    `span` bounds the legal right-hand line numbers; source lines outside
    `queried` are dropped.
    """
    text = _FENCE_RE.sub("", raw or "")
    dec = json.JSONDecoder()
    found = None
    for m in re.finditer(r"\{", text):
        try:
            obj, _ = dec.raw_decode(text, m.start())
        except ValueError:
            continue
        found = _as_mapping(obj)
        if found is not None:
            break
    if found is None:
        raise UnparseableResponse("no mapping object in response")
    if queried is not None:
        q = set(queried)
        extra = [k for k in found if k not in q]
        if extra:
            log.debug("dropping unqueried source lines %s", extra)
        found = {k: v for k, v in found.items() if k in q}
    if span is not None:
        lo, hi = span
        bad = sorted({p for v in found.values() for p in v if not lo <= p <= hi})
        if bad:
            raise OutOfRangeLines(f"lines {bad} outside {lo}..{hi}")
    return LineMapping.build(found, queried)
