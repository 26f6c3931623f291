"""Exception hierarchy shared across the engine."""


class SceneMotionError(Exception):
    """Base class for all engine errors."""


class ValidationError(SceneMotionError):
    """Invalid or non-finite input data."""


class PlacementError(SceneMotionError):
    """A requested position lies outside the usable region."""


class UnreachableError(SceneMotionError):
    """No collision-free path exists between the requested endpoints."""


class TrainingError(SceneMotionError):
    """Training aborted (bad dataset, diverged loss, ...)."""
