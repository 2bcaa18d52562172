"""Exception hierarchy.

Every failure raised by the package derives from :class:`MgBoundsError`.
The CLI maps the subclasses onto its exit codes through ``exit_code``.
"""


class MgBoundsError(Exception):
    exit_code = 1


class ConfigError(MgBoundsError):
    exit_code = 2


class BadParameter(ConfigError, ValueError):
    pass


class BadDimension(ConfigError, ValueError):
    pass


class NonSymmetric(MgBoundsError, ValueError):
    exit_code = 3


class NotSpd(MgBoundsError, ValueError):
    exit_code = 3


class Singular(MgBoundsError, ValueError):
    exit_code = 3


class NotAConvergent(MgBoundsError, ValueError):
    exit_code = 3


class DegeneratePencil(MgBoundsError):
    exit_code = 3


class OutOfTheoryRange(MgBoundsError):
    exit_code = 3


class BadBracket(MgBoundsError):
    exit_code = 3


class NoConvergence(MgBoundsError, RuntimeError):
    exit_code = 4


class SimilarityNotSymmetric(MgBoundsError):
    exit_code = 4


class CrossCheckFailed(MgBoundsError, AssertionError):
    exit_code = 4


class NontrivialCaseViolated(MgBoundsError):
    exit_code = 5
