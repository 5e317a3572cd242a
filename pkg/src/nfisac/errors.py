"""Exception hierarchy. Each CLI exit code maps to one branch."""


class NfisacError(Exception):
    """Base class for all package errors."""


class GeometryError(NfisacError, ValueError):
    pass


class SingularityError(NfisacError, ValueError):
    """A field point coincides with an antenna element or array center."""


class ConfigError(NfisacError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InfeasibleError(NfisacError):
    """The design problem has no feasible point.

    ``family`` names the constraint family whose removal restores feasibility
    (``"rate"``, ``"cross_correlation"`` or ``"power"``), and
    ``max_feasible_rate`` carries the bisection diagnostic when computed.
    """

    def __init__(self, message: str, family: str | None = None,
                 max_feasible_rate: float | None = None):
        super().__init__(message)
        self.family = family
        self.max_feasible_rate = max_feasible_rate


class SolverError(NfisacError):
    def __init__(self, message: str, status: str | None = None, diagnostics: dict | None = None):
        super().__init__(message)
        self.status = status
        self.diagnostics = diagnostics or {}


class DegenerateUserError(NfisacError, ValueError):
    """A lifted user matrix delivers no power along the user's channel."""


class ReconstructionError(NfisacError):
    """Rank-one recovery produced a non-PSD residual sensing covariance."""


class SignalGenerationError(NfisacError, ValueError):
    pass


class VerificationError(NfisacError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
