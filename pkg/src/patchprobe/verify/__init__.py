"""Lexing, normalization, equivalence checking and the final verdict.

Exports resolve lazily: the lexer is needed by the source model, while the
verdict logic depends on the source model, so eager imports would cycle.
"""

import importlib

_EXPORTS = {
    "Verdict": "verdict", "VerdictValue": "verdict", "build_verification_prompt": "verdict",
    "decide": "verdict",
    "Equivalence": "equivalence", "EquivalenceVerdict": "equivalence",
    "SolverConfig": "equivalence", "bounded_equivalence_oracle": "equivalence",
    "check_equivalence": "equivalence",
    "Token": "lexer", "TokenKind": "lexer", "lex_line": "lexer",
    "NormalizedEquation": "statements", "StatementKind": "statements",
    "StatementUnit": "statements", "equations": "statements",
    "extract_statements": "statements", "normalize_statement": "statements",
    "unique_equations": "statements",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name not in _EXPORTS:
        raise AttributeError(name)
    mod = importlib.import_module(f".{_EXPORTS[name]}", __name__)
    return getattr(mod, name)
