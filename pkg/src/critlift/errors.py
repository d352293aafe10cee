"""Exception hierarchy shared by every critlift module."""


class CritLiftError(Exception):
    """Base class for all errors raised by critlift."""


class InvalidMatrix(CritLiftError, ValueError):
    pass


class ShapeError(CritLiftError, ValueError):
    pass


class DegenerateInput(CritLiftError, ValueError):
    pass


class DomainError(CritLiftError, ValueError):
    pass


class RangeError(CritLiftError, ValueError):
    """Requested loss gradient lies outside the range of ``q -> d/dp loss(p, q)``.

    ``max_scale`` is the supremum of ``lam`` in ``(0, 1]`` for which
    ``lam * g`` would be feasible; the bound itself is excluded because the
    feasible set is open.
    """

    def __init__(self, message, max_scale):
        super().__init__(message)
        self.max_scale = float(max_scale)


class EmbeddingError(CritLiftError, ValueError):
    pass


class ActivationError(CritLiftError, ValueError):
    pass


class InsufficientSamples(CritLiftError):
    def __init__(self, message, required_n):
        super().__init__(message)
        self.required_n = int(required_n)


class MaxRetries(CritLiftError):
    pass


class ConfigError(CritLiftError, ValueError):
    pass


class DegenerateResidual(CritLiftError):
    """The residual vector is zero, so the function vanishes identically."""


class CertificationFailed(CritLiftError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
