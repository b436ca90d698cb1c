import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
SCENARIOS = FIXTURES / "scenarios"
CORPUS = FIXTURES / "corpus"
SNIPPETS = FIXTURES / "snippets"


def read(path) -> str:
    return Path(path).read_text()


def scenario_meta(name):
    return json.loads((CORPUS / "cases" / f"{name}_patched" / "meta.json").read_text())


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def corpus_dir():
    return CORPUS


def prepare(case_name):
    """Source-side preparation of one corpus case, mirroring the runner."""
    from types import SimpleNamespace

    from patchprobe.enhance import ProjectIndex, enhance, resolve_macros, substitute_function
    from patchprobe.ingest import parse_pseudocode
    from patchprobe.pipeline.case import load_case
    from patchprobe.source_model import (Version, annotate_patch_lines, classify_patch,
                                         extract_function, parse_unified_diff)

    inp = load_case(CORPUS / "cases" / case_name)
    diff = parse_unified_diff(read(inp.diff_path))
    vul = annotate_patch_lines(extract_function(read(inp.vul_source_path), inp.function_name,
                                                Version.PRE_PATCH, str(inp.vul_source_path)), diff)
    pat = annotate_patch_lines(extract_function(read(inp.patch_source_path), inp.function_name,
                                                Version.PATCHED, str(inp.patch_source_path)), diff)
    index = ProjectIndex(inp.project_dir or inp.diff_path.parent)
    slices = {f.version_tag: enhance(f, index) for f in (vul, pat) if f.patch_lines}
    full = {f.version_tag: substitute_function(f, resolve_macros(f, index, range(1, len(f) + 1)))
            for f in (vul, pat)}
    return SimpleNamespace(inp=inp, diff=diff, kind=classify_patch(diff), vul=vul, pat=pat,
                           slices=slices, full=full,
                           pseudo=parse_pseudocode(read(inp.pseudo_path), inp.function_name))


# ---------------------------------------------------------------- acceptance summary

_acceptance: dict = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        crit = getattr(getattr(item, "function", None), "criterion", None)
        if crit is not None:
            _acceptance[item.nodeid] = [crit, "NOT RUN"]


def pytest_runtest_logreport(report):
    entry = _acceptance.get(report.nodeid)
    if entry is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry[1] = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (n, text), status in sorted(_acceptance.values()):
        terminalreporter.write_line(f"criterion {n}: {status}  {text}")
