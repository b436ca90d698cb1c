"""Prompt templates for the localization and verification tasks."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from ..errors import OversizePrompt, PromptError
from ..source_model import PATCH_MARK
from ..verify.lexer import count_tokens

# model tokenizers split code finer than the lexer does
TOKEN_SAFETY_FACTOR = 1.5
DEFAULT_CONTEXT_TOKENS = 16000

MAPPING_SCHEMA = "line-map/1"
JSON_FORMAT_SAMPLE = '{"<source line number>": [<pseudocode line numbers>], "12": [40, 41], "15": []}'

LOCALIZATION_TEMPLATE = (
    "Suppose you are a software reverse engineer with strong code analysis skills. "
    "You have the source code of a function and the pseudo code obtained through binary "
    "decompilation. Lines in the source code that end with \"//patch_code\" are patch codes. "
    "Can you identify the patch codes in the pseudo code that corresponds to the patch code? "
    "Must only output your findings as a JSON dictionary.\n"
    "\n"
    "- Output format:<json_format_sample>\n"
    "\n"
    "- Source code: <source_code>\n"
    "\n"
    "- Pseudocode: <pseudo_code>\n"
)

VERIFICATION_TEMPLATE = (
    "You are a software reverse engineer analyzing decompiled pseudo code. Your task is to "
    "determine whether the code is patched or pre-patch version by analyzing the reliability "
    "of matching results. Must only output your findings as a JSON dictionary.\n"
    "\n"
    "- INPUT:\n"
    "1. Diff File: <patch_diff_label>\n"
    "2. patched version matches: <patch_result_json>\n"
    "3. pre-patch version matches: <vul_result_json>\n"
    "\n"
    "- ANALYSIS REQUIREMENTS: Evaluate each match in patched and pre-patch: Semantic "
    "correctness, Logic consistency, Context compatibility, Potential false matches. Compare "
    "quality of matches: Which version has more reliable matches, Which matches might be "
    "incorrect, Overall semantic alignment\n"
    "\n"
    "- RULES: Only one result (patched version or pre-patch version) corresponds to the correct "
    "version. Better semantic match determines the version\n"
    "\n"
    '- Output format: {"version": "patched"} or {"version": "pre-patch"}\n'
)

RETRY_REMINDER = ("\n\nReminder: output only the mapping object as a JSON dictionary, "
                  "with no other text.")

PLACEHOLDERS = {
    "Localization": ("json_format_sample", "source_code", "pseudo_code"),
    "Verification": ("patch_diff_label", "patch_result_json", "vul_result_json"),
}
_ANY_PLACEHOLDER = re.compile("<(" + "|".join(n for v in PLACEHOLDERS.values() for n in v) + ")>")


class TemplateId(str, enum.Enum):
    LOCALIZATION = "Localization"
    VERIFICATION = "Verification"


@dataclass(frozen=True)
class Prompt:
    template_id: TemplateId
    rendered_text: str
    placeholders_filled: dict = field(default_factory=dict, compare=False)

    def with_suffix(self, extra: str) -> "Prompt":
        return Prompt(self.template_id, self.rendered_text + extra, self.placeholders_filled)


def fill(template_id: TemplateId, values: dict) -> Prompt:
    template = LOCALIZATION_TEMPLATE if template_id is TemplateId.LOCALIZATION else VERIFICATION_TEMPLATE
    missing = [n for n in PLACEHOLDERS[template_id.value] if n not in values]
    if missing:
        raise PromptError(f"missing placeholder values: {missing}")
    # single pass, so code that happens to contain "<pseudo_code>" is not re-expanded
    text = _ANY_PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), template)
    return Prompt(template_id, text, dict(values))


def number_lines(pairs) -> str:
    return "\n".join(f"{i}: {t}" for i, t in pairs)


def build_localization_prompt(src, seg, context_tokens: int = DEFAULT_CONTEXT_TOKENS) -> Prompt:
    """`src` is a TruncatedSource (or anything with `.lines` of (n, text)); `seg` a PseudoSegment."""
    if not any(t.endswith(PATCH_MARK) for _, t in src.lines):
        raise PromptError("source block has no //patch_code line")
    if not seg.lines:
        raise PromptError("pseudocode segment is empty")
    source_block = "\n" + number_lines(src.lines)
    pseudo_block = "\n" + number_lines(seg.lines)
    p = fill(TemplateId.LOCALIZATION, {
        "json_format_sample": JSON_FORMAT_SAMPLE,
        "source_code": source_block,
        "pseudo_code": pseudo_block,
    })
    est = count_tokens(p.rendered_text.splitlines()) * TOKEN_SAFETY_FACTOR
    if est > context_tokens:
        raise OversizePrompt(f"prompt needs ~{int(est)} tokens, budget is {context_tokens}")
    return p
