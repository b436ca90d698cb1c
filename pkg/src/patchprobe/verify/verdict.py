"""Final verdict: unique-equation matching against the target slices, with a
provider reasoning fallback."""

from __future__ import annotations

import enum
import json
import logging
import shutil
from dataclasses import dataclass, field

from ..errors import (OutOfRangeLines, PatchProbeError, ProviderExhausted, ReplayMiss,
                      TransportError, UnparseableResponse)
from ..localize.core import LocalizationResult
from ..localize.prompts import Prompt, TemplateId, fill
from ..localize.provider import Provider, ProviderConfig
from ..source_model import AnnotatedFunction, Version
from .equivalence import Equivalence, EquivalenceVerdict, SolverConfig, check_equivalence
from .statements import NormalizedEquation, StatementKind, equations, unique_equations

log = logging.getLogger(__name__)

FALLBACK_WIDTH = 10  # exhaustive width used when no solver binary is installed


class VerdictValue(str, enum.Enum):
    PATCHED = "Patched"
    VULNERABLE = "Vulnerable"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Verdict:
    value: VerdictValue
    basis: str | None  # solver | reasoning | None (Unknown)
    evidence: tuple = ()
    diagnostic: str = ""

    def to_dict(self):
        return {"value": self.value.value, "basis": self.basis,
                "evidence": list(self.evidence), "diagnostic": self.diagnostic}

    @classmethod
    def from_dict(cls, d):
        return cls(VerdictValue(d["value"]), d.get("basis"), tuple(d.get("evidence", ())),
                   d.get("diagnostic", ""))


@dataclass(frozen=True)
class EquivalenceSettings:
    width: int = 32
    mode: str = "solver"
    solver: SolverConfig = field(default_factory=SolverConfig)


def _result_json(res: LocalizationResult) -> str:
    return json.dumps({"version": res.version_tag.value, "provenance": res.provenance,
                       "matches": res.matches()}, indent=1)


def build_verification_prompt(diff_label: str, patch_match: LocalizationResult,
                              vul_match: LocalizationResult) -> Prompt:
    return fill(TemplateId.VERIFICATION, {
        "patch_diff_label": diff_label,
        "patch_result_json": _result_json(patch_match),
        "vul_result_json": _result_json(vul_match),
    })


def parse_verification_answer(raw: str) -> VerdictValue:
    dec = json.JSONDecoder()
    text = raw or ""
    for k, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = dec.raw_decode(text, k)
        except ValueError:
            continue
        if isinstance(obj, dict):
            v = str(obj.get("version", "")).strip().lower()
            if v == "patched":
                return VerdictValue.PATCHED
            if v in ("pre-patch", "prepatch", "pre_patch"):
                return VerdictValue.VULNERABLE
    raise UnparseableResponse("no {\"version\": ...} object in answer")


def target_equations(res: LocalizationResult, pseudo=None) -> list[NormalizedEquation]:
    """Equations of statements that start on a line of the pseudocode slice.

    With the whole pseudo function available, statements spanning several
    lines are read completely; otherwise each slice line stands alone.
    """
    lines = set(res.pseudo_line_numbers)
    if pseudo is not None:
        return [e for e in equations(list(pseudo.lines)) if e.source_line in lines]
    out = []
    for n, text in res.pseudo_slice:
        out.extend(equations([text], start=n))
    return out


def _settings_for_run(eq: EquivalenceSettings) -> EquivalenceSettings:
    if eq.mode == "solver" and shutil.which(eq.solver.path) is None:
        log.warning("solver %r not found; using exhaustive checking at %d bits",
                    eq.solver.path, FALLBACK_WIDTH)
        return EquivalenceSettings(min(eq.width, FALLBACK_WIDTH), "exhaustive", eq.solver)
    return eq


def _compare(u: NormalizedEquation, t: NormalizedEquation, eq: EquivalenceSettings):
    if u.kind is not t.kind:
        return None
    if u.kind is StatementKind.CONDITIONAL:
        try:
            return check_equivalence(u, t, eq.width, eq.mode, eq.solver)
        except PatchProbeError as exc:  # unsupported operator, too many variables, solver trouble
            log.debug("skip %s vs %s: %s", u.canonical, t.canonical, exc)
            return None
    if u.key == t.key:
        return EquivalenceVerdict(Equivalence.EQUAL, None, "syntactic", eq.width, {},
                                  u.canonical, t.canonical)
    return None


def _matches(unique, targets, side, eq) -> list[dict]:
    found = []
    for u in unique:
        for t in targets:
            v = _compare(u, t, eq)
            if v is not None and v.is_match:
                found.append({"side": side, "kind": u.kind.value, "unique": u.canonical,
                              "unique_line": u.source_line, "target": t.canonical,
                              "target_line": t.source_line,
                              "unique_vars": dict(u.var_origin), "target_vars": dict(t.var_origin),
                              "equivalence": v.to_dict()})
    return found


def decide(vul_func: AnnotatedFunction, patch_func: AnnotatedFunction, results,
           cfg: ProviderConfig, provider: Provider | None = None,
           equivalence: EquivalenceSettings | None = None, diff_label: str = "",
           pseudo=None) -> Verdict:
    by_version = {r.version_tag: r for r in results}
    if len(results) != 2 or set(by_version) != {Version.PRE_PATCH, Version.PATCHED}:
        raise ValueError("decide needs one PrePatch and one Patched localization result")
    eq = _settings_for_run(equivalence or EquivalenceSettings())
    vul_eqs = equations(vul_func.texts)
    patch_eqs = equations(patch_func.texts)
    u_patch = unique_equations(patch_eqs, vul_eqs)
    u_vul = unique_equations(vul_eqs, patch_eqs)
    hit_patch = _matches(u_patch, target_equations(by_version[Version.PATCHED], pseudo), "patched", eq)
    hit_vul = _matches(u_vul, target_equations(by_version[Version.PRE_PATCH], pseudo), "pre-patch", eq)
    if hit_patch and not hit_vul:
        return Verdict(VerdictValue.PATCHED, "solver", tuple(hit_patch))
    if hit_vul and not hit_patch:
        return Verdict(VerdictValue.VULNERABLE, "solver", tuple(hit_vul))

    why = "both unique sets matched" if hit_patch else "no unique equation matched"
    evidence = tuple(hit_patch + hit_vul)
    client = provider if provider is not None else Provider(cfg)
    prompt = build_verification_prompt(diff_label, by_version[Version.PATCHED],
                                       by_version[Version.PRE_PATCH])
    answers = []

    def parse(raw):
        answers.append(raw)
        return parse_verification_answer(raw)

    try:
        value = client.ask(prompt, parse)
    except (UnparseableResponse, OutOfRangeLines, TransportError, ReplayMiss) as exc:
        err = ProviderExhausted(f"reasoning fallback failed: {exc}")
        return Verdict(VerdictValue.UNKNOWN, None, evidence, f"{why}; {err}")
    return Verdict(value, "reasoning", evidence + ({"reasoning": answers[-1]},), why)
