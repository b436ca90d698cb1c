"""Command line entry point: run-case, run-corpus, check-eq."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .errors import ConfigError, ManifestMalformed, PatchProbeError
from .pipeline.case import load_case
from .pipeline.config import PipelineConfig
from .pipeline.runner import run_case, run_corpus
from .verify.equivalence import SolverConfig, check_equivalence
from .verify.statements import normalize_text

EXIT_OK, EXIT_CONFIG, EXIT_CASE = 0, 1, 2


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    cfg = cfg.with_provider(mode=args.provider, replay_dir=args.replay_dir)
    if args.audit_dir:
        cfg = replace(cfg, audit_dir=args.audit_dir)
    return cfg


def _emit(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_common(p):
    p.add_argument("--provider", choices=("remote", "replay", "heuristic"))
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--replay-dir", help="directory of recorded responses")
    p.add_argument("--audit-dir", help="write per-case prompt/response logs here")
    p.add_argument("--report", help="write the JSON report to this path")
    p.add_argument("--no-timing", action="store_true", help="omit timing fields")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patchprobe",
                                 description="Source-level patch presence test on decompiled code")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="cmd", required=True)

    rc = sub.add_parser("run-case", help="test one case directory")
    rc.add_argument("--case", required=True)
    _add_common(rc)

    rp = sub.add_parser("run-corpus", help="run a manifest of cases and score them")
    rp.add_argument("--manifest", required=True)
    rp.add_argument("--workers", type=int)
    rp.add_argument("--report-dir", help="also write one report file per case")
    _add_common(rp)

    ce = sub.add_parser("check-eq", help="compare two conditions")
    ce.add_argument("--lhs", required=True)
    ce.add_argument("--rhs", required=True)
    ce.add_argument("--width", type=int, default=32)
    ce.add_argument("--mode", choices=("solver", "exhaustive"), default="solver")
    ce.add_argument("--solver-path", default="z3")
    ce.add_argument("--timeout", type=float, default=10.0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.cmd == "check-eq":
        try:
            lhs, rhs = normalize_text(args.lhs), normalize_text(args.rhs)
            if lhs is None or rhs is None:
                raise ValueError("could not parse both expressions")
            v = check_equivalence(lhs, rhs, args.width, args.mode,
                                  SolverConfig(args.solver_path, args.timeout))
        except (PatchProbeError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(json.dumps(v.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK

    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.cmd == "run-case":
        try:
            inp = load_case(args.case)
        except PatchProbeError as exc:
            print(f"case error: {exc}", file=sys.stderr)
            return EXIT_CASE
        rep = run_case(inp, cfg)
        _emit(rep.to_json(not args.no_timing), args.report)
        if rep.error:
            print(f"case error: {rep.error['type']}: {rep.error['message']}", file=sys.stderr)
            return EXIT_CASE
        print(f"{rep.case_id}: {rep.verdict.value.value} ({rep.verdict.basis})", file=sys.stderr)
        return EXIT_OK

    try:
        corpus = run_corpus(args.manifest, cfg, args.workers, args.report_dir)
    except ManifestMalformed as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(corpus.to_json(not args.no_timing), args.report)
    m = corpus.metrics
    if m is not None:
        fmt = lambda x: "n/a" if x is None else f"{x:.3f}"
        print(f"cases={len(corpus.cases)} errors={corpus.errors} unknown={corpus.unknown} "
              f"P={fmt(m.precision)} R={fmt(m.recall)} F1={fmt(m.f1)}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
