"""Exception hierarchy shared across the toolkit."""


class MistError(Exception):
    """Base class for all domain errors raised by this package."""


class InfrastructureError(MistError):
    """The execution runner itself could not be started or answered garbage.

    Distinct from any test verdict: a verdict describes the subject code,
    an InfrastructureError describes the harness.
    """


class MissingWeight(MistError):
    """A killed mutant has no difficulty-weight entry."""


class EmptyGroup(MistError):
    """Advantage normalization requested for an empty reward group."""


class EmptyMutantPool(MistError):
    """Mutation score is undefined when the mutant pool is empty."""


class DuplicateTest(MistError):
    """A test id occurs more than once where uniqueness is required."""


class RepairFailed(MistError):
    """Backtracking repair exhausted its budget without a parseable prefix."""

    def __init__(self, message: str, diagnostic: str = ""):
        super().__init__(message)
        self.diagnostic = diagnostic
