"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class CapacityError(RuntimeError):
    """A requested exact computation exceeds its enumeration or search cap."""


class DegenerateInputError(ValueError):
    """Inputs are structurally valid but make the requested quantity undefined."""
