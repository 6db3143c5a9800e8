"""Exception types shared across the package.

Each error carries the process exit code the command-line driver maps it to:
parameter/validation problems exit with 2, resource-limit refusals with 3,
anything else nonzero with 1.
"""


class HypermfError(Exception):
    exit_code = 1


class ParameterError(HypermfError):
    """Invalid argument, configuration value, or input object."""

    exit_code = 2


class ValidationError(HypermfError):
    """A validation run found violations."""

    exit_code = 2


class ParseError(ParameterError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ResourceLimitError(HypermfError):
    """Requested computation exceeds the configured work/memory budget."""

    exit_code = 3


class CFLError(ParameterError):
    """Transport step rejected because dt violates the CFL condition."""


class IntegrationError(HypermfError):
    """Time integration aborted (non-finite state)."""
