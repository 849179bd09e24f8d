"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: InputError -> 2, PreconditionError -> 3,
NumericError -> 4.
"""


class KtError(Exception):
    """Base class for all package errors."""


class InputError(KtError):
    """Malformed or rejected input (bad flags, bad JSON, parse failures)."""


class ExprParseError(InputError):
    """Syntax error in a potential expression.

    Carries the 0-based character position and a short description of what
    was expected.
    """

    def __init__(self, message, position, expected=None):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class PreconditionError(KtError):
    """An operation was called outside its stated domain."""


class TrivialTensorError(PreconditionError):
    """The tensor is a multiple of the metric and generates no web."""


class SingularPointError(PreconditionError):
    """The requested point has coinciding eigenvalues."""


class DegenerateClassError(PreconditionError):
    """Operation requires an elliptic-hyperbolic tensor."""


class DegenerateOrbitError(PreconditionError):
    """Pair operation requires two non-degenerate (elliptic-hyperbolic) orbits."""


class CoincidentFociError(PreconditionError):
    """Angle undefined because two of the involved foci coincide."""


class CompatibilityError(PreconditionError):
    """Bertrand-Darboux residual does not vanish where required."""


class NumericError(KtError):
    """Numerical failure: singularities hit, unstable ranks, branch failures."""


class EvaluationSingularityError(NumericError):
    """Expression evaluation hit a pole or domain boundary."""


class DegenerateSamplingError(NumericError):
    """Nullspace dimension changed under resampling; sample set unreliable."""
