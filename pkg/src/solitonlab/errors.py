"""Exception and warning types shared across the toolkit."""


class SolitonLabError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SolitonLabError, ValueError):
    """A speed function or geometric formula was evaluated outside its domain."""


class ArgError(SolitonLabError, ValueError):
    """An argument is invalid independently of any domain question."""


class RootFindFailed(SolitonLabError, RuntimeError):
    """No sign change could be bracketed for an implicit solve."""


class MultipleRootsWarning(UserWarning):
    """Two candidate roots were bracketed at the same distance from the guess."""
