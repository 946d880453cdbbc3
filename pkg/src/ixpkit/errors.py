"""Exception hierarchy; the CLI maps these onto exit codes."""


class IxpkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(IxpkitError):
    """Bad input data or files (CLI exit code 2)."""


class PipelineError(IxpkitError):
    """Failure inside a pipeline stage (CLI exit code 3)."""
