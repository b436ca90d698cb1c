"""End-to-end case execution and corpus runs."""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..enhance import ProjectIndex, enhance, resolve_macros, substitute_function
from ..errors import AnchorMissing, PatchProbeError
from ..ingest import parse_pseudocode
from ..localize.core import localize, reverse_match
from ..localize.provider import Provider
from ..source_model import (PatchKind, Version, annotate_patch_lines, classify_patch,
                            extract_function, parse_unified_diff)
from ..verify.verdict import VerdictValue, decide
from .case import CaseInput, CaseLoadError, CaseReport, load_case, read_manifest
from .config import PipelineConfig
from .metrics import Metrics, compute_metrics

log = logging.getLogger(__name__)

_index_cache: dict = {}
_index_lock = threading.Lock()


def project_index(root, globs) -> ProjectIndex:
    """Shared, read-only index per project directory."""
    key = (str(Path(root).resolve()), tuple(globs))
    with _index_lock:
        idx = _index_cache.get(key)
        if idx is None:
            idx = _index_cache[key] = ProjectIndex(root, globs)
        return idx


def _read(path: Path, case_id: str) -> str:
    try:
        return path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise CaseLoadError(f"cannot read {path}: {exc}", case_id=case_id) from exc


def _ms(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000.0, 3)


def run_case(inp: CaseInput, cfg: PipelineConfig, provider: Provider | None = None) -> CaseReport:
    """Run one case; failures end up in `report.error` rather than raising."""
    report = CaseReport(inp.case_id, ground_truth=inp.ground_truth, provider=cfg.provider.label)
    if provider is None:
        audit = Path(cfg.audit_dir) / f"{inp.case_id}.jsonl" if cfg.audit_dir else None
        provider = Provider(cfg.provider, audit)
    client = provider
    timing = {"offline_ms": 0.0, "online_ms": 0.0}
    phase = "offline"
    t0 = time.perf_counter()
    try:
        # OffLine: patch parsing, source-side enhancement
        diff = parse_unified_diff(_read(inp.diff_path, inp.case_id))
        kind = classify_patch(diff)
        report.patch_kind = kind.value
        vul = extract_function(_read(inp.vul_source_path, inp.case_id), inp.function_name,
                               Version.PRE_PATCH, str(inp.vul_source_path))
        pat = extract_function(_read(inp.patch_source_path, inp.case_id), inp.function_name,
                               Version.PATCHED, str(inp.patch_source_path))
        vul = annotate_patch_lines(vul, diff)
        pat = annotate_patch_lines(pat, diff)
        index = project_index(inp.project_dir or inp.diff_path.parent, cfg.project_globs)
        slices = {f.version_tag: enhance(f, index) for f in (vul, pat) if f.patch_lines}
        need = {PatchKind.EDIT: (Version.PRE_PATCH, Version.PATCHED),
                PatchKind.ADD_ONLY: (Version.PATCHED,),
                PatchKind.DELETE_ONLY: (Version.PRE_PATCH,)}[kind]
        for v in need:
            if v not in slices:
                raise AnchorMissing(f"{kind.value} patch has no lines in the {v.value} function",
                                    case_id=inp.case_id)
        full = {}
        unresolved = set()
        for f in (vul, pat):
            table = resolve_macros(f, index, range(1, len(f) + 1))
            full[f.version_tag] = substitute_function(f, table)
            unresolved.update(table.unresolved)
            report.macro_substitutions.update(table.values)
        report.unresolved_macros = sorted(unresolved)
        timing["offline_ms"] = _ms(t0)

        # OnLine: everything that touches the target
        phase = "online"
        t0 = time.perf_counter()
        pseudo = parse_pseudocode(_read(inp.pseudo_path, inp.case_id), inp.function_name)
        lim = cfg.token_limit
        if kind is PatchKind.EDIT:
            results = [localize(slices[v], pseudo, cfg.provider, client, lim)
                       for v in (Version.PRE_PATCH, Version.PATCHED)]
        elif kind is PatchKind.ADD_ONLY:
            fwd = localize(slices[Version.PATCHED], pseudo, cfg.provider, client, lim)
            rev = reverse_match(fwd, full[Version.PRE_PATCH], cfg.provider, pseudo, kind, client, lim)
            results = [rev, fwd]
        else:
            fwd = localize(slices[Version.PRE_PATCH], pseudo, cfg.provider, client, lim)
            rev = reverse_match(fwd, full[Version.PATCHED], cfg.provider, pseudo, kind, client, lim)
            results = [fwd, rev]
        report.localizations = results
        report.verdict = decide(full[Version.PRE_PATCH], full[Version.PATCHED], results,
                                cfg.provider, client, cfg.equivalence, diff.serialize(), pseudo)
        timing["online_ms"] = _ms(t0)
    except PatchProbeError as exc:
        timing[f"{phase}_ms"] = _ms(t0)
        report.error = {"type": type(exc).__name__, "message": str(exc), "phase": phase}
        log.warning("case %s failed: %s: %s", inp.case_id, type(exc).__name__, exc)
    report.timing = timing
    report.provider_usage = dict(client.usage)
    return report


@dataclass
class CorpusReport:
    cases: list
    metrics: Metrics | None

    @property
    def errors(self) -> int:
        return sum(1 for c in self.cases if c.error)

    @property
    def unknown(self) -> int:
        return sum(1 for c in self.cases if c.verdict and c.verdict.value is VerdictValue.UNKNOWN)

    def to_dict(self, include_timing: bool = True) -> dict:
        return {
            "cases": [c.to_dict(include_timing) for c in self.cases],
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "total": len(self.cases),
            "errors": self.errors,
            "unknown": self.unknown,
        }

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusReport":
        from .metrics import Metrics as M
        return cls([CaseReport.from_dict(c) for c in d["cases"]],
                   M(**d["metrics"]) if d.get("metrics") else None)


def _run_entry(entry, cfg: PipelineConfig, report_dir: Path | None) -> CaseReport:
    case_dir, gt = entry
    try:
        inp = load_case(case_dir, gt)
    except PatchProbeError as exc:
        rep = CaseReport(exc.case_id or Path(case_dir).name, ground_truth=gt,
                         provider=cfg.provider.label,
                         error={"type": type(exc).__name__, "message": str(exc), "phase": "load"})
    else:
        rep = run_case(inp, cfg)
    if report_dir is not None:
        (report_dir / f"{rep.case_id}.json").write_text(rep.to_json(), encoding="utf-8")
    return rep


def run_corpus(manifest_path, cfg: PipelineConfig, workers: int | None = None,
               report_dir=None) -> CorpusReport:
    entries = read_manifest(manifest_path)
    n = workers or cfg.worker_count()
    rdir = Path(report_dir) if report_dir else None
    if rdir is not None:
        rdir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=n) as pool:
        cases = list(pool.map(lambda e: _run_entry(e, cfg, rdir), entries))
    scored = [(c.ground_truth, c.verdict.value) for c in cases
              if not c.error and c.verdict is not None and c.ground_truth]
    metrics = compute_metrics(scored) if scored else None
    return CorpusReport(cases, metrics)
