"""Exception types shared across the package."""


class BusyLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BusyLabError):
    """Invalid configuration; carries the full list of violations."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class TiltOutOfDomain(BusyLabError):
    """Exponential tilt requested outside the mgf domain, or for a family
    without a closed-form tilted law."""


class UnstableRegime(BusyLabError):
    """Asymptotic formula evaluated at rho >= 1 where it is undefined."""


class DomainError(BusyLabError):
    """Argument outside the mathematical domain of an operation."""


class NoRoot(BusyLabError):
    """No strictly positive root of the tilt equation exists in the mgf domain."""


class EmptySample(BusyLabError):
    """Estimator invoked on an empty sample."""


class GridMismatch(BusyLabError):
    """Estimate and comparison curve do not share a grid or parameter digest."""


class DegenerateSample(BusyLabError):
    """Order statistics degenerate (e.g. tied top values in a tail-index fit)."""


class InsufficientWindow(BusyLabError):
    """Fit window contains too few usable grid points."""


class TooFewQualifiers(BusyLabError):
    """Not enough cycles satisfy the conditioning event for a path profile."""
