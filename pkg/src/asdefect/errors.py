"""Exception hierarchy.

The CLI maps these onto exit codes: input problems -> 1, infeasible
constructions -> 2, broken invariants -> 3.
"""


class AsDefectError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AsDefectError, ValueError):
    """An argument lies outside the domain of an operation."""


class ContainmentError(DomainError):
    """A lattice is not a sublattice of the other."""


class MonotonicityError(AsDefectError):
    """A supposedly non-increasing sequence went up."""


class WrongTypeError(DomainError):
    """A transition was requested from a state of the wrong type."""


class HypothesisViolation(DomainError):
    """A step does not satisfy the hypotheses of the transition it feeds."""


class ConsistencyError(AsDefectError):
    """An internal invariant failed; this is always a bug somewhere."""


class InfeasibleStepError(AsDefectError):
    """No admissible step exists within the configured search caps."""


class TruncationError(AsDefectError):
    """The requested answer depends on coefficients beyond the guarantee."""


class FieldMismatchError(DomainError):
    """Two series live over different coefficient fields."""


class NotAUnitError(DomainError):
    """A series expected to be a unit has zero constant term."""


class NonUnitLambdaError(AsDefectError):
    """The factor left after substitution is not a unit (two-leading-term case)."""
