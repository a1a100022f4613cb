"""Exception taxonomy shared by the whole package."""


class ParameterError(ValueError):
    """An argument is outside its documented range (bad m, k, type index, ...)."""


class DomainError(ValueError):
    """The operation is undefined for the given parameters (e.g. eigenvalue
    condition not met), even though each argument is individually valid."""


class ResourceGuardError(RuntimeError):
    """An exact computation would exceed the configured size guard."""
