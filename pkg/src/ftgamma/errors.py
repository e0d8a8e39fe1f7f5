"""Exception types shared across the package."""


class NumericsError(ArithmeticError):
    """A numerical routine failed to converge or lost too much precision."""


class FitError(RuntimeError):
    """Maximum-likelihood estimation could not be completed."""
