"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid hyperparameters, e.g. a segment count that does not divide d."""


class TripleParseError(ValueError):
    """A triple file line that does not have exactly three tab-separated fields."""

    def __init__(self, path, lineno, line):
        self.path = path
        self.lineno = lineno
        self.line = line
        super().__init__(f"{path}:{lineno}: expected 3 tab-separated fields, got {line!r}")


class CheckpointError(ValueError):
    """Malformed checkpoint file or checkpoint/vocabulary mismatch."""


class TrainingError(RuntimeError):
    """Raised when an SGD step produces a non-finite loss or gradient."""

    def __init__(self, triple, epoch, label=None):
        self.triple = triple
        self.epoch = epoch
        self.label = label
        super().__init__(
            f"non-finite loss/gradient at epoch {epoch} on triple {tuple(triple)} (label={label})"
        )
