"""Exception types raised across :mod:`fftdecomp`."""


class DecompositionError(ValueError):
    """Base class for invalid decomposition requests."""


class InvalidCoordinateError(DecompositionError):
    """A coordinate or 1-D index falls outside the data shape."""


class UnsupportedProcessCountError(DecompositionError):
    """The process count is not in ``[1, total]``."""


class InvalidLayoutError(DecompositionError):
    """A layout string or permutation is malformed."""


class CapacityError(RuntimeError):
    """The requested enumeration is too large for the selected mode."""


class NoCatalogError(KeyError):
    """No catalog of known-best orders exists for the dimension count."""


class MethodInapplicableError(ValueError):
    """A baseline decomposition cannot run at the requested process count."""


class InfeasibleParallelismError(DecompositionError):
    """Some rank's ownership splits a 1-D FFT line."""
