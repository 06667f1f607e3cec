"""Exception types shared across ringlab."""


class ConfigError(ValueError):
    """Invalid device configuration: bad schema key, unit, or physical invariant.

    The message always starts with the dotted path of the offending field,
    e.g. ``ring1.gamma_i: intrinsic loss must be positive``.
    """


class DataError(ValueError):
    """Malformed input data file (CSV schema mismatch, non-numeric cell)."""


class FitError(RuntimeError):
    """Least-squares estimation failed: non-convergence, rank-deficient
    Jacobian, or a window that violates the fit's preconditions."""
