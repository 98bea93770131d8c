"""Exception hierarchy shared by all ehwsn modules."""


class EhwsnError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidInput(EhwsnError):
    """An argument violates a documented precondition."""


class InfeasibleLoad(EhwsnError):
    """The offered traffic saturates the radio (negative idle fraction)."""


class Saturated(EhwsnError):
    """Total packet error probability reached 1; no finite rate exists."""


class NoRealSolution(EhwsnError):
    """The collision-probability quadratic has no real root."""


class NoFeasibleLimit(EhwsnError):
    """The saturation cubic admits no positive duty-cycle period."""


class NumericalFailure(EhwsnError):
    """A closed-form solve produced no admissible root (corrupt inputs)."""


class Infeasible(EhwsnError):
    """No policy or operating point can satisfy the given constraint."""


class NonConvergence(EhwsnError):
    """An iterative solver hit its iteration cap before converging."""


class DegenerateSupport(EhwsnError):
    """A distribution support is unusable (e.g. stage duration <= 0)."""


class TraceFormat(EhwsnError):
    """A stage-trace or policy CSV file is malformed."""


class ConfigError(EhwsnError):
    """A run configuration file is missing, malformed, or inconsistent."""
