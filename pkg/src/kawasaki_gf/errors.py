"""Exception hierarchy.

Validation problems derive from ``ValueError`` and numerical failures from
``ArithmeticError``; the CLI maps the first family to exit code 1 and the
second to exit code 2.
"""


class InputError(ValueError):
    """Malformed or out-of-range argument."""


class SizeError(InputError):
    """Subset enumeration requested on too many points."""


class ConfigurationError(ValueError):
    """Inconsistent model set-up (e.g. kernel range vs torus size)."""


class DomainError(ValueError):
    """Parameters outside the region where a bound formula is defined."""


class StateError(RuntimeError):
    """Operation not allowed in the current simulation state."""


class StatisticsError(RuntimeError):
    """Too few samples for the requested statistical test."""


class NumericalBlowUp(ArithmeticError):
    """NaN or Inf produced by a solver."""


class StepSizeError(ArithmeticError):
    """Time step too large: negativity beyond tolerance."""
