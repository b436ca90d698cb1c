"""Case directories, reports and corpus manifests."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ManifestMalformed, PatchProbeError
from ..localize.core import LocalizationResult
from ..verify.verdict import Verdict

REPORT_SCHEMA = "patchprobe-report/1"
GROUND_TRUTH = ("patched", "vulnerable")

DEFAULT_FILES = {
    "diff_path": "patch.diff",
    "vul_source_path": "func_vul.c",
    "patch_source_path": "func_patch.c",
    "pseudo_path": "target_pseudo.c",
}


class CaseLoadError(PatchProbeError):
    pass


@dataclass(frozen=True)
class CaseInput:
    case_id: str
    diff_path: Path
    vul_source_path: Path
    patch_source_path: Path
    pseudo_path: Path
    function_name: str
    ground_truth: str | None = None
    project_dir: Path | None = None

    def missing_files(self) -> list[str]:
        return [str(p) for p in (self.diff_path, self.vul_source_path,
                                 self.patch_source_path, self.pseudo_path) if not p.is_file()]


def load_case(case_dir, ground_truth: str | None = None) -> CaseInput:
    """Read `meta.json` in a case directory.

    Only meta.json must exist here; missing inputs surface later as a case
    error so corpus runs keep going.
    """
    case_dir = Path(case_dir)
    meta_path = case_dir / "meta.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CaseLoadError(f"cannot read {meta_path}: {exc}", case_id=case_dir.name) from exc
    case_id = str(meta.get("case_id") or case_dir.name)
    if "function_name" not in meta:
        raise CaseLoadError("meta.json lacks function_name", case_id=case_id)
    gt = ground_truth or meta.get("ground_truth")
    if gt is not None and gt not in GROUND_TRUTH:
        raise CaseLoadError(f"ground_truth must be one of {GROUND_TRUTH}", case_id=case_id)
    paths = {k: case_dir / meta.get(k, v) for k, v in DEFAULT_FILES.items()}
    project = meta.get("project_dir")
    return CaseInput(case_id=case_id, function_name=meta["function_name"], ground_truth=gt,
                     project_dir=(case_dir / project) if project else case_dir, **paths)


def read_manifest(manifest_path) -> list[tuple[Path, str | None]]:
    """Return (case_dir, ground_truth override) pairs."""
    manifest_path = Path(manifest_path)
    try:
        data = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestMalformed(f"cannot read manifest {manifest_path}: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ManifestMalformed("manifest must be a non-empty JSON array")
    base = manifest_path.parent
    out = []
    for k, entry in enumerate(data):
        if isinstance(entry, str):
            out.append((base / entry, None))
        elif isinstance(entry, dict) and isinstance(entry.get("case_dir"), str):
            gt = entry.get("ground_truth")
            if gt is not None and gt not in GROUND_TRUTH:
                raise ManifestMalformed(f"entry {k}: bad ground_truth {gt!r}")
            out.append((base / entry["case_dir"], gt))
        else:
            raise ManifestMalformed(f"entry {k} is neither a path nor {{\"case_dir\": ...}}")
    return out


@dataclass
class CaseReport:
    case_id: str
    verdict: Verdict | None = None
    patch_kind: str | None = None
    localizations: list = field(default_factory=list)  # LocalizationResult
    timing: dict = field(default_factory=dict)          # offline_ms / online_ms
    provider_usage: dict = field(default_factory=dict)
    unresolved_macros: list = field(default_factory=list)
    macro_substitutions: dict = field(default_factory=dict)
    ground_truth: str | None = None
    provider: str = ""
    error: dict | None = None

    @property
    def provenance(self) -> dict:
        return {r.version_tag.value: r.provenance for r in self.localizations}

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema": REPORT_SCHEMA,
            "case_id": self.case_id,
            "ground_truth": self.ground_truth,
            "patch_kind": self.patch_kind,
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "localizations": [r.to_dict() for r in self.localizations],
            "provenance": self.provenance,
            "provider": self.provider,
            "provider_usage": dict(self.provider_usage),
            "unresolved_macros": list(self.unresolved_macros),
            "macro_substitutions": dict(self.macro_substitutions),
            "error": self.error,
        }
        if include_timing:
            d["timing"] = dict(self.timing)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CaseReport":
        return cls(
            case_id=d["case_id"],
            verdict=Verdict.from_dict(d["verdict"]) if d.get("verdict") else None,
            patch_kind=d.get("patch_kind"),
            localizations=[LocalizationResult.from_dict(r) for r in d.get("localizations", [])],
            timing=dict(d.get("timing", {})),
            provider_usage=dict(d.get("provider_usage", {})),
            unresolved_macros=list(d.get("unresolved_macros", [])),
            macro_substitutions=dict(d.get("macro_substitutions", {})),
            ground_truth=d.get("ground_truth"),
            provider=d.get("provider", ""),
            error=d.get("error"),
        )

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)
