"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    pass


class BackendMismatch(TypeError):
    """Raised when exact-rational and float values meet in one computation."""


class DegenerateInput(ValueError):
    pass


class EmptySetError(ValueError):
    pass


class CapExceeded(RuntimeError):
    """An enumeration or set expansion would exceed its configured cap."""

    def __init__(self, what, size, cap):
        super().__init__(f"{what}: size {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class GenerationError(RuntimeError):
    """Retry budget exhausted while placing a point in some cube."""

    def __init__(self, message, cube=None, worst_gap=None):
        super().__init__(message)
        self.cube = cube
        self.worst_gap = worst_gap


class MalformedScheme(ValueError):
    pass


class WitnessSearchError(RuntimeError):
    def __init__(self, message, cube=None):
        super().__init__(message)
        self.cube = cube
