"""Exceptions raised on numerical failures (as opposed to bad arguments, which raise ValueError)."""


class KickedMZIError(Exception):
    """Base class for numerical failures; the CLI maps these to exit code 1."""


class UnstableDynamicsError(KickedMZIError):
    """Photon number grew past the unbounded-growth guard, or parameters violate stability."""


class NotConvergedError(KickedMZIError):
    pass


class CalibrationError(KickedMZIError):
    pass


class InconsistentTangentError(KickedMZIError):
    """Pure state with a non-vanishing purity derivative; indicates a broken tangent."""
