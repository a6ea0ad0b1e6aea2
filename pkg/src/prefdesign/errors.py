"""Exception types shared across the package."""


class PrefdesignError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(PrefdesignError, ValueError):
    """An input violates a documented precondition (shape, range, domain)."""


class SamplerDegenerateError(PrefdesignError, RuntimeError):
    """The posterior sampler accepted no proposals after burn-in."""


class NoPathError(PrefdesignError, RuntimeError):
    """The planner could not produce a goal-reaching trajectory."""


class DegenerateQueryError(PrefdesignError, RuntimeError):
    """Query synthesis collapsed to fewer than two distinct candidates."""


class DegenerateDesignError(PrefdesignError, RuntimeError):
    """Every environment tried during design produced a degenerate query."""


class IllConditionedModelError(PrefdesignError, RuntimeError):
    """The surrogate's kernel matrix could not be factorized even with jitter."""


class UndefinedCorrelationError(PrefdesignError, RuntimeError):
    """Pearson correlation is undefined because one reward vector is constant."""
