"""Exception hierarchy shared across the package."""


class SdnnError(Exception):
    """Base class for all errors raised by this package."""


class GroupError(SdnnError):
    """A supplied set of actions does not form a finite group."""


class NotClosed(GroupError):
    pass


class NoIdentity(GroupError):
    pass


class NoInverse(GroupError):
    pass


class NotAssociative(GroupError):
    pass


class ActionUndefined(GroupError):
    """A probe point hit a singular action while building a group."""


class SingularPoint(SdnnError, ValueError):
    """An action was applied outside its domain of definition."""


class IndexOutOfRange(SdnnError, IndexError):
    pass


class NoLinearRep(SdnnError):
    """First-layer materialization requested for an action-only group."""


class UnsupportedOrder(SdnnError, ValueError):
    pass


class NonFinite(SdnnError, FloatingPointError):
    """Loss or gradient overflowed; parameters have diverged."""


class ZeroNorm(SdnnError, ZeroDivisionError):
    pass


class InvalidDomain(SdnnError, ValueError):
    pass


class DegenerateRegion(SdnnError, ValueError):
    pass


class ConfigInvalid(SdnnError, ValueError):
    pass
