class SharpIVError(Exception):
    """Base class for errors raised by sharpiv."""


class ValidationError(SharpIVError, ValueError):
    """Input data or arguments violate a precondition."""


class NumericalError(SharpIVError, ArithmeticError):
    """A numerical routine failed (bracketing, quadrature, weak instrument...)."""


class DegeneracyWarning(UserWarning):
    """A quantity was computed on degenerate input (ties, constant scores...)."""
