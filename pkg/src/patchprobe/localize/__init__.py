from .core import LocalizationResult, localize, reverse_match
from .heuristic import heuristic_localize
from .mapping import LineMapping, parse_localization_response
from .prompts import Prompt, TemplateId, build_localization_prompt
from .provider import Provider, ProviderConfig, query_provider

__all__ = [
    "LocalizationResult", "localize", "reverse_match", "heuristic_localize",
    "LineMapping", "parse_localization_response", "Prompt", "TemplateId",
    "build_localization_prompt", "Provider", "ProviderConfig", "query_provider",
]
