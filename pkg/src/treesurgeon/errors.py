"""Exception hierarchy shared by all treesurgeon modules."""


class TreeSurgeonError(Exception):
    """Base class for every error raised by this package."""


class GraphError(TreeSurgeonError, ValueError):
    pass


class MalformedLine(GraphError):
    def __init__(self, lineno, line, reason="expected 'U V RATE_FWD RATE_BWD'"):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")


class DuplicateEdge(GraphError):
    pass


class NonpositiveRate(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class NotIrreducible(GraphError):
    pass


class UnknownEdge(GraphError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown edge"


class InvalidDensity(GraphError):
    pass


class MixedArithmetic(GraphError):
    pass


class NotASwapConfiguration(TreeSurgeonError):
    pass


class SameRoot(TreeSurgeonError, ValueError):
    pass


class ConstraintMentionsPinned(TreeSurgeonError, ValueError):
    pass


class InvalidConstraint(TreeSurgeonError, ValueError):
    pass


class ZeroRequiredRate(TreeSurgeonError, ValueError):
    pass


class MissingReverseEdge(TreeSurgeonError, ValueError):
    pass


class BridgePinned(TreeSurgeonError, ValueError):
    pass


class DisconnectedWithoutPins(BridgePinned):
    pass


class RankDeficient(TreeSurgeonError):
    """Raised when a linearity system lacks the rank it needs.

    The offending rank certificate is attached as ``certificate``.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NonfiniteRate(TreeSurgeonError, ValueError):
    pass


class TooShort(TreeSurgeonError, ValueError):
    pass


class WrongArity(TreeSurgeonError, ValueError):
    pass


class TooFewVertices(UserWarning):
    """Warning: too few vertices for the rank test to be informative."""


class BackendDisagreement(TreeSurgeonError):
    """The enumeration and determinant backends returned different values."""


class IdentityViolation(TreeSurgeonError):
    """An identity that must hold exactly was found to fail."""
