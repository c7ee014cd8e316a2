"""
errors.py

Named error conditions raised across the `ewachain` package.

Every class derives from `ValueError` through `EwaChainError`, so callers that only care
about "the input could not be used" can keep catching `ValueError`. The resource-cap errors
additionally share `ResourceCapExceeded`, which the command line maps to exit code 3.
"""


class EwaChainError(ValueError):
    """Base class for all errors raised by the package."""


class ResourceCapExceeded(EwaChainError):
    """An exhaustive enumeration was refused because it exceeds a configured cap."""


class StateSpaceTooLarge(ResourceCapExceeded):
    def __init__(self, p, cap):
        self.p = p
        self.cap = cap
        super().__init__(f"State space of size 2^{p} exceeds the oracle cap of {cap} states.")


class EnumerationTooLarge(ResourceCapExceeded):
    def __init__(self, what, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"Enumeration of {what} needs {count} supports which exceeds the cap of {cap}.")


class ZeroColumn(EwaChainError):
    def __init__(self, j):
        self.j = j
        super().__init__(f"Column {j} of the design matrix is the zero vector and cannot be normalized.")


class DimensionMismatch(EwaChainError):
    pass


class AlreadyActive(EwaChainError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"Column {k} is already part of the active set.")


class NotActive(EwaChainError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"Column {k} is not part of the active set.")


class NotDisjoint(EwaChainError):
    pass


class NoConvergence(EwaChainError):
    """Coordinate descent hit `max_iter`; the best iterate found is attached as `best`."""

    def __init__(self, max_iter, best):
        self.max_iter = max_iter
        self.best = best
        super().__init__(f"Lasso coordinate descent did not converge within {max_iter} sweeps.")


class RootHasNoParent(EwaChainError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"State {state} is the root T of the G-tree and has no parent.")


class TreeConstructionError(EwaChainError):
    pass


class CycleDetected(TreeConstructionError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"Following the G-map from state {state} revisits a state; the parent map has a cycle.")


class OracleInvariantError(EwaChainError):
    pass


class ConfigInvalid(EwaChainError):
    pass
