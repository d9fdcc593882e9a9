"""Exception types shared across the package."""


class BudgetError(Exception):
    """An operation was refused because it exceeds a hard resource budget."""


class ConfigError(Exception):
    """An experiment configuration is malformed or inconsistent."""


class GraphGenerationError(Exception):
    """Random graph generation failed after the bounded retry budget."""


class ProblemFileError(ValueError):
    """A graph file could not be parsed; message carries the line number."""


class CheckpointError(Exception):
    """A checkpoint file is malformed or incompatible with the target setup."""
