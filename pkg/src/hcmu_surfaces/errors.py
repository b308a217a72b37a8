"""Exception types raised by hcmu_surfaces."""


class HCMUError(Exception):
    """Base class for all library errors."""

    kind = "HCMUError"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def record(self):
        """Machine-readable summary, used by the CLI error channel."""
        rec = {"error": self.kind, "message": str(self)}
        rec.update({k: v for k, v in self.context.items() if _jsonable(v)})
        return rec


def _jsonable(v):
    return isinstance(v, (str, int, float, bool)) or v is None


class ConfigError(HCMUError):
    kind = "ConfigError"


class RejectedParams(ConfigError):
    kind = "RejectedParams"


class DegenerateMetric(HCMUError):
    kind = "DegenerateMetric"


class DomainError(HCMUError):
    kind = "DomainError"


class UmbilicReached(DomainError):
    kind = "UmbilicReached"


class ThetaSaturation(DomainError):
    kind = "ThetaSaturation"


class DenominatorSingular(DomainError):
    kind = "DenominatorSingular"


class NumericalFailure(HCMUError):
    kind = "NumericalFailure"


class ConvergenceFailure(NumericalFailure):
    kind = "ConvergenceFailure"


class ConstraintBlowup(NumericalFailure):
    kind = "ConstraintBlowup"


class SolverStopped(NumericalFailure):
    """The integrator stopped on an event before covering the requested range."""

    kind = "SolverStopped"


class MetricShapeMismatch(HCMUError):
    kind = "MetricShapeMismatch"


class StencilOutOfRange(HCMUError):
    kind = "StencilOutOfRange"


class FormatError(HCMUError):
    kind = "FormatError"


class UnsupportedModel(HCMUError):
    kind = "UnsupportedModel"
