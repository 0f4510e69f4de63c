"""Exception hierarchy.

Everything raised on bad input or an unsatisfiable request derives from
:class:`ReachError`; the CLI maps these to exit code 1.
"""


class ReachError(Exception):
    """Base class for domain errors."""


class ValidationError(ReachError):
    """Raw model input does not describe a valid game or automaton."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DanglingEdge(ValidationError):
    pass


class NoSuccessor(ValidationError):
    pass


class BadDistribution(ValidationError):
    pass


class DuplicateState(ValidationError):
    pass


class InvalidAutomaton(ValidationError):
    pass


class UnknownState(ReachError):
    pass


class DomainMismatch(ReachError):
    pass


class NotConverged(ReachError):
    """Value iteration hit its iteration cap. ``result`` holds the partial answer."""

    def __init__(self, result, message=None):
        self.result = result
        super().__init__(
            message
            or f"not converged after {result.iterations} iterations "
            f"(residual {result.residual:.3g})"
        )


class SingularSystem(ReachError):
    pass


class TooLarge(ReachError):
    pass


class NotFixedPoint(ReachError):
    pass


class NoValuePreservingEdge(ReachError):
    pass


class HorizonNotFound(ReachError):
    pass


class IncompleteStrategy(ReachError):
    pass


class InvariantBroken(ReachError):
    pass
