"""Exception hierarchy shared by every stage of the pipeline."""


class PatchProbeError(Exception):
    """Base class; carries an optional case id for corpus reporting."""

    def __init__(self, message="", case_id=None):
        super().__init__(message)
        self.case_id = case_id


# source model
class MalformedDiff(PatchProbeError):
    pass


class MultiFileDiff(PatchProbeError):
    pass


class EmptyPatch(PatchProbeError):
    pass


class FunctionNotFound(PatchProbeError):
    pass


class UnbalancedBraces(PatchProbeError):
    pass


class PatchLineNotFound(PatchProbeError):
    pass


# enhance
class NoPatchLines(PatchProbeError):
    pass


# ingest
class EmptyInput(PatchProbeError):
    pass


class AnchorMissing(PatchProbeError):
    pass


# localize
class PromptError(PatchProbeError):
    """Prompt precondition violated (e.g. source without any patch marker)."""


class OversizePrompt(PatchProbeError):
    pass


class TransportError(PatchProbeError):
    pass


class RateLimited(TransportError):
    pass


class ReplayMiss(PatchProbeError):
    pass


class UnparseableResponse(PatchProbeError):
    pass


class OutOfRangeLines(PatchProbeError):
    pass


class AllSegmentsFailed(PatchProbeError):
    pass


class PreconditionError(PatchProbeError):
    pass


# verify
class UnsupportedOperator(PatchProbeError):
    pass


class TooManyVariables(PatchProbeError):
    pass


class SolverError(PatchProbeError):
    pass


class ProviderExhausted(PatchProbeError):
    pass


# pipeline
class ConfigError(PatchProbeError):
    pass


class ManifestMalformed(PatchProbeError):
    pass
