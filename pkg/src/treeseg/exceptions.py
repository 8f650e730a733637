"""Exception hierarchy for treeseg."""


class TreeSegError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TreeSegError):
    """A transcript or annotation record could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInputError(TreeSegError):
    pass


class AnnotationError(TreeSegError):
    """Annotation spans violate the partition invariants."""


class AnnotationDepthError(AnnotationError):
    pass


class IntegrityError(TreeSegError):
    """Numerical or structural corruption detected (bad vectors, broken sums)."""


class ConfigurationError(TreeSegError):
    """Fatal misconfiguration, e.g. rejected credentials."""


class BackendError(TreeSegError):
    """An embedding backend request failed."""


class EmbeddingError(TreeSegError):
    def __init__(self, message, failed_anchors=()):
        self.failed_anchors = list(failed_anchors)
        super().__init__(f"{message} (failed anchors: {self.failed_anchors})")


class DegenerateInputError(TreeSegError, ValueError):
    """Input too short for the requested metric window."""
