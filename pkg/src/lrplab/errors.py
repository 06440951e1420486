"""Exception hierarchy shared by all lrplab modules."""


class LRPError(Exception):
    """Base class for every error raised by lrplab."""


class DomainError(LRPError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class PreconditionError(LRPError, ValueError):
    """An operation was called with inputs violating its precondition."""


class ConstraintViolation(LRPError, ValueError):
    """A strict scale schedule violates one of its defining inequalities."""

    def __init__(self, failures):
        self.failures = list(failures)
        names = ", ".join(f.name for f in self.failures)
        super().__init__(f"strict schedule violates: {names}")


class CapacityError(LRPError):
    """A vertex, edge or BFS budget would be exceeded."""


class FormatError(LRPError, ValueError):
    """Malformed graph file: bad magic, truncated payload, trailing bytes."""


class VersionMismatch(FormatError):
    """The file was written by an unsupported format version."""


class IntegrityError(FormatError):
    """Checksum mismatch; the payload is corrupted."""
