"""Exception hierarchy.

Validation problems (bad input, bad config) derive from ``ValidationError``;
failures that happen while computing (capacity, region, pole, identity
mismatch) derive from ``ComputationError``. The CLI maps the two families to
exit codes 1 and 2.
"""


class KFreeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(KFreeError, ValueError):
    """An input or configuration failed validation."""


class ConfigError(ValidationError):
    """An experiment configuration is inconsistent."""


class ComputationError(KFreeError):
    """A computation could not be carried out as requested."""


class CapacityError(ComputationError):
    """Requested size exceeds a table limit or the documented memory bound."""


class DomainError(ComputationError, ValueError):
    """Argument outside the mathematical domain of a function (e.g. omega(0))."""


class RegionError(ComputationError):
    """Evaluation point outside the validated region of the analytic engine."""


class PoleError(RegionError):
    """Evaluation point too close to a pole."""


class IdentityMismatchError(ComputationError):
    """A coefficient identity that must hold exactly failed."""

    def __init__(self, n, lhs, rhs, label=""):
        self.n, self.lhs, self.rhs = n, lhs, rhs
        super().__init__(f"{label} mismatch at n={n}: lhs={lhs}, rhs={rhs}".strip())
