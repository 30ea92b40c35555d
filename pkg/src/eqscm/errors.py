"""Exception hierarchy shared across the package.

Everything user-facing derives from EqscmError so the CLI can map failures
to exit codes in one place (validation problems -> 1, runtime errors -> 2).
"""


class EqscmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EqscmError):
    """A network failed structural validation; carries the report."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class CycleError(EqscmError):
    """The regulation graph contains a directed cycle."""


class UnknownSpecies(EqscmError):
    """A species id does not resolve within the network."""


class UnknownReaction(EqscmError):
    """A reaction key does not resolve within the network."""


class RateSetMismatch(EqscmError):
    """Two rate assignments do not cover the same reaction set."""


class DegenerateTheta(EqscmError):
    """An activation probability is undefined (zero total reaction mass)."""


class StepTooLarge(EqscmError):
    """Requested integrator step exceeds the stability guard."""


class BoundaryTheta(EqscmError):
    """Gaussian noise transform requested too close to a boundary probability."""


class ObservationOutOfRange(EqscmError):
    """An observed value is outside the support of its assignment."""


class IncompleteObservation(EqscmError):
    """Counterfactual abduction requires a value for every species."""


class InterventionOnInput(EqscmError):
    """do() targets must be species, not constant input signals."""


class InfeasibleIntervention(EqscmError):
    """No positive rate achieves the requested equilibrium mean."""


class ConfigError(EqscmError):
    """An evaluation protocol configuration violates its invariants."""
