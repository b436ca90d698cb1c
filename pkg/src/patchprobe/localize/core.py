"""Forward localization of an enhanced slice and reverse matching for
add-only / delete-only patches."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..enhance import EnhancedSlice
from ..errors import AllSegmentsFailed, OutOfRangeLines, PreconditionError, UnparseableResponse
from ..ingest import (DEFAULT_TOKEN_LIMIT, PseudoFunction, segment_pseudocode,
                      truncate_source)
from ..source_model import AnnotatedFunction, PatchKind, SourceLine, Version
from .mapping import LineMapping, parse_localization_response
from .prompts import MAPPING_SCHEMA, build_localization_prompt
from .provider import Provider, ProviderConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalizationResult:
    version_tag: Version
    mapping: LineMapping
    pseudo_slice: tuple[tuple[int, str], ...]
    provenance: str  # forward | reverse
    segment_span: tuple[int, int] | None = None
    provider: str = ""
    source_lines: tuple[tuple[int, str], ...] = ()  # queried source lines with text
    schema: str = MAPPING_SCHEMA

    @property
    def pseudo_line_numbers(self) -> list[int]:
        return [n for n, _ in self.pseudo_slice]

    def matches(self) -> list[dict]:
        """Per-source-line view used in verification prompts."""
        pseudo = dict(self.pseudo_slice)
        mapped = dict(self.mapping.pairs)
        out = []
        for n, text in self.source_lines:
            ps = mapped.get(n, ())
            out.append({"source_line": n, "source_code": text.strip(),
                        "pseudo_lines": list(ps),
                        "pseudo_code": [pseudo[p].strip() for p in ps if p in pseudo]})
        return out

    def to_dict(self):
        return {
            "version": self.version_tag.value,
            "provenance": self.provenance,
            "mapping": self.mapping.as_dict(),
            "pseudo_slice": [[n, t] for n, t in self.pseudo_slice],
            "segment_span": list(self.segment_span) if self.segment_span else None,
            "provider": self.provider,
            "source_lines": [[n, t] for n, t in self.source_lines],
            "schema": self.schema,
        }

    @classmethod
    def from_dict(cls, d):
        m = d["mapping"]
        return cls(
            Version(d["version"]),
            LineMapping.build({int(k): v for k, v in m.items()}),
            tuple((int(n), t) for n, t in d["pseudo_slice"]),
            d["provenance"],
            tuple(d["segment_span"]) if d.get("segment_span") else None,
            d.get("provider", ""),
            tuple((int(n), t) for n, t in d.get("source_lines", [])),
            d.get("schema", MAPPING_SCHEMA),
        )


def _client(cfg, provider):
    return provider if provider is not None else Provider(cfg)


def _search(query_src, searched: PseudoFunction, client: Provider, token_limit):
    """Ask about every segment of `searched`; return (mapping, segment) with best coverage."""
    queried = query_src.marked_lines
    best = None
    segments = segment_pseudocode(searched, token_limit)
    for seg in segments:
        prompt = build_localization_prompt(query_src, seg, client.cfg.context_tokens)
        try:
            mapping = client.ask(prompt, lambda raw, s=seg: parse_localization_response(
                raw, s.span, queried))
        except (UnparseableResponse, OutOfRangeLines) as exc:
            log.warning("segment %s failed: %s", seg.span, exc)
            continue
        # coverage first, lowest span start on ties
        if best is None or mapping.coverage > best[0].coverage:
            best = (mapping, seg)
    if best is None:
        raise AllSegmentsFailed(f"all {len(segments)} segments failed")
    return best


def localize(slice: EnhancedSlice, func: PseudoFunction, cfg: ProviderConfig,
             provider: Provider | None = None, token_limit: int = DEFAULT_TOKEN_LIMIT) -> LocalizationResult:
    if not slice.lines or slice.function is None:
        raise PreconditionError("enhanced slice is empty")
    client = _client(cfg, provider)
    texts = {ln.index: ln.text for ln in slice.lines}
    marked = slice.function.with_texts(texts).with_marks(texts)
    anchor = (slice.patch_line_numbers or slice.line_numbers)[0]
    src = truncate_source(marked, token_limit, anchor)
    mapping, seg = _search(src, func, client, token_limit)
    in_window = set(src.marked_lines)
    return LocalizationResult(
        slice.version_tag, mapping,
        tuple((p, func.text_of(p)) for p in mapping.pseudo_lines),
        "forward", seg.span, cfg.label,
        tuple((n, t) for n, t in sorted(texts.items()) if n in in_window),
    )


def _as_annotated(pseudo: PseudoFunction, marks, version) -> AnnotatedFunction:
    marks = set(marks)
    return AnnotatedFunction(
        pseudo.name,
        tuple(SourceLine(i, t, i in marks) for i, t in enumerate(pseudo.lines, 1)),
        pseudo.syntax, version)


def reverse_match(found: LocalizationResult, other_version_func: AnnotatedFunction,
                  cfg: ProviderConfig, pseudo: PseudoFunction, kind: PatchKind,
                  provider: Provider | None = None,
                  token_limit: int = DEFAULT_TOKEN_LIMIT) -> LocalizationResult:
    """Locate the other version's counterpart by querying with the found pseudocode slice."""
    ok = ((kind is PatchKind.ADD_ONLY and found.version_tag is Version.PATCHED)
          or (kind is PatchKind.DELETE_ONLY and found.version_tag is Version.PRE_PATCH))
    if not ok:
        raise PreconditionError(f"reverse matching needs AddOnly/Patched or DeleteOnly/PrePatch, "
                                f"got {kind.value}/{found.version_tag.value}")
    version = other_version_func.version_tag
    if not found.pseudo_slice:
        return LocalizationResult(version, LineMapping(), (), "reverse", None, cfg.label)
    client = _client(cfg, provider)
    query_fn = _as_annotated(pseudo, found.pseudo_line_numbers, found.version_tag)
    query_src = truncate_source(query_fn, token_limit, found.pseudo_line_numbers[0])
    searched = PseudoFunction(other_version_func.name, tuple(other_version_func.texts),
                              other_version_func.syntax)
    fwd, seg = _search(query_src, searched, client, token_limit)
    inv = fwd.inverted()  # source line of other version -> pseudo lines
    return LocalizationResult(
        version, inv,
        tuple((p, pseudo.text_of(p)) for p in inv.pseudo_lines),
        "reverse", seg.span, cfg.label,
        tuple((n, other_version_func.text_of(n)) for n, _ in inv.pairs),
    )
