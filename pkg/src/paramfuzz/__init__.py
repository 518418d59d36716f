"""Runtime-parameter-aware driver fuzzing on a simulated kernel device model."""

__version__ = "0.1.0"
