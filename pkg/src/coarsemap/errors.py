"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
1 = usage, 2 = data, 3 = numeric non-convergence.
"""


class CoarseMapError(Exception):
    exit_code = 2


class UsageError(CoarseMapError):
    exit_code = 1


class NegativeEntry(CoarseMapError, ValueError):
    pass


class NonFinite(CoarseMapError, ValueError):
    pass


class AsymmetricInput(CoarseMapError, ValueError):
    pass


class NonPositiveEpsilon(CoarseMapError, ValueError):
    pass


class SiteSetMismatch(CoarseMapError, ValueError):
    pass


class InsufficientData(CoarseMapError, ValueError):
    pass


class NoPairsBeyondR0(CoarseMapError, ValueError):
    pass


class EmptyGrid(CoarseMapError, ValueError):
    pass


class EpsilonTooSmall(CoarseMapError, ValueError):
    pass


class MaxIterExceeded(CoarseMapError, RuntimeError):
    exit_code = 3


class SupportOutOfRange(CoarseMapError, ValueError):
    pass


class OverlappingSupports(CoarseMapError, ValueError):
    pass


class SubsetTooLarge(CoarseMapError, ValueError):
    pass


class CapExceeded(CoarseMapError, ValueError):
    pass


class DimensionMismatch(CoarseMapError, ValueError):
    pass


class SpecError(CoarseMapError, ValueError):
    pass


class ParseError(CoarseMapError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class InsufficientPairs(CoarseMapError, ValueError):
    pass


class ZeroValuesInWindow(CoarseMapError, ValueError):
    pass


class NonPositiveFunction(CoarseMapError, ValueError):
    pass


class NonConvergence(CoarseMapError, RuntimeError):
    exit_code = 3
