"""Exception hierarchy shared across the pipeline.

Each error class carries the process exit code the CLI maps it to.
"""


class GraftkitError(Exception):
    exit_code = 1


class ConfigError(GraftkitError):
    """Invalid configuration value or missing required setting."""

    exit_code = 2


class BackendError(GraftkitError):
    """LLM backend failure that survived the retry budget, or a fatal
    protocol problem (e.g. the server cannot return logprobs)."""

    exit_code = 3


class DataError(GraftkitError):
    """Malformed or insufficient data (corpus files, artifacts, counts)."""

    exit_code = 4


class AlignmentError(GraftkitError):
    """A word could not be matched to any model token; the affected
    document is skipped rather than aborting the run."""
