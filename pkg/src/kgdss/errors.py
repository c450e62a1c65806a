"""Engine-wide exception types.

Every error the engine can surface maps to exactly one machine code; the
HTTP layer relies on that mapping, and the CLI uses KgdssError as its
catch-all for exit code 1.
"""
from __future__ import annotations


class KgdssError(Exception):
    """Base class for all engine errors."""

    code = "engine_error"

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


# -- kg-store -----------------------------------------------------------------

class EmptyLabel(KgdssError):
    code = "empty_label"


class AllPatternsEmpty(KgdssError):
    code = "all_patterns_empty"


class SourceMismatch(KgdssError):
    code = "source_mismatch"


class KgParseError(KgdssError):
    """Malformed KG line file; message names the offending line."""

    code = "kg_parse_error"

    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(message)
        self.line = line


# -- fol-engine ---------------------------------------------------------------

class QuerySyntaxError(KgdssError):
    """Bad logical-query text; carries the byte offset and a token hint."""

    code = "query_syntax_error"

    def __init__(self, message: str, *, offset: int, expected: str | None = None):
        super().__init__(message)
        self.offset = offset
        self.expected = expected

    def __str__(self) -> str:
        base = super().__str__()
        hint = f" (expected {self.expected})" if self.expected else ""
        return f"{base} at byte offset {self.offset}{hint}"


# -- retrieval ----------------------------------------------------------------

class DimensionMismatch(KgdssError):
    code = "dimension_mismatch"


class IndexFormatError(KgdssError):
    code = "index_format_error"


# -- llm-gateway --------------------------------------------------------------

class LlmError(KgdssError):
    code = "llm_error"


class LlmTimeout(LlmError):
    code = "llm_timeout"


class BackendError(LlmError):
    code = "backend_error"


class ScriptExhausted(LlmError):
    code = "script_exhausted"


class ScriptMismatch(LlmError):
    code = "script_mismatch"


# -- templates ----------------------------------------------------------------

class TemplateError(KgdssError):
    code = "template_error"


# -- orchestrator -------------------------------------------------------------

class DecompositionFailed(KgdssError):
    """All decomposition attempts failed; keeps every reply and parse error."""

    code = "decomposition_failed"

    def __init__(self, message: str, attempts: list[tuple[str, str]]):
        super().__init__(message, stage="decompose")
        self.attempts = attempts


class StepParseFailed(KgdssError):
    code = "step_parse_failed"

    def __init__(self, message: str, *, reply: str, step: int):
        super().__init__(message, stage="execute-chain")
        self.reply = reply
        self.step = step


class NoKnowledge(KgdssError):
    code = "no_knowledge"


# -- construction -------------------------------------------------------------

class IncompleteReview(KgdssError):
    code = "incomplete_review"

    def __init__(self, message: str, missing: list[int]):
        super().__init__(message)
        self.missing = missing


# -- service ------------------------------------------------------------------

class ConfigError(KgdssError):
    code = "config_error"
