"""Exception hierarchy shared by all modules.

Exit codes used by the command line map onto these classes, see ``cli``.
"""


class CGLWaveError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(CGLWaveError, ValueError):
    """Invalid grid, parameters, solver settings or config document.

    ``violations`` lists every problem found, not only the first one.
    """

    exit_code = 2

    def __init__(self, message, violations=None):
        self.violations = list(violations) if violations else [message]
        super().__init__(message)


class RegimeViolation(CGLWaveError):
    """The state left the small-perturbation regime (e.g. ``|Psi|^2`` too far from 1)."""

    exit_code = 3

    def __init__(self, message, report=None, trajectory=None):
        super().__init__(message)
        self.report = dict(report or {})
        self.trajectory = trajectory


class VanishingRisk(RegimeViolation):
    """``|Psi|`` came too close to zero for the hydrodynamic lifting."""

    def __init__(self, message, min_modulus, location, trajectory=None):
        super().__init__(
            message,
            report={"min_modulus": float(min_modulus), "location": list(location)},
            trajectory=trajectory,
        )
        self.min_modulus = float(min_modulus)
        self.location = tuple(location)


class NumericalInstability(CGLWaveError):
    """Norm blow-up during time integration."""

    exit_code = 4

    def __init__(self, message, diagnostics=None, trajectory=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
        self.trajectory = trajectory


class LemmaViolation(CGLWaveError):
    """A fitted semigroup envelope turned out to be unbounded on the sweep."""

    exit_code = 4
