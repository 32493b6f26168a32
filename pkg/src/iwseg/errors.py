"""Exception types shared across the package."""


class IwsegError(Exception):
    """Base class for all package errors."""


class ValidationError(IwsegError):
    """Invalid input: bad file, malformed header, contract violation.

    The service maps this to HTTP 400 and the CLI to exit code 2. Anything
    else escaping a handler is an internal error (HTTP 500, exit code 3).
    """


class InternalInvariantError(IwsegError):
    """A result violated one of its own declared invariants (a bug)."""
