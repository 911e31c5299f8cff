"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, dimensions, or input files."""


class EnumerationBudgetError(RuntimeError):
    """Codebook or sum constellation too large to enumerate exhaustively."""


class InfeasibleDesignError(RuntimeError):
    """No grid point satisfies the power budget and full-diversity condition."""
