from .case import CaseInput, CaseReport, load_case, read_manifest
from .config import PipelineConfig
from .metrics import Metrics, compute_metrics
from .runner import CorpusReport, run_case, run_corpus

__all__ = ["CaseInput", "CaseReport", "load_case", "read_manifest", "PipelineConfig",
           "Metrics", "compute_metrics", "CorpusReport", "run_case", "run_corpus"]
