"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (bad keys, grids, fractions...)."""


class CapabilityError(TypeError):
    """A component was asked for something it cannot provide."""


class BudgetExhaustedError(RuntimeError):
    """A proposal/simulation budget ran out before the target was met."""


class EstimatorError(RuntimeError):
    """A density estimator produced unusable output (non-finite values...)."""
