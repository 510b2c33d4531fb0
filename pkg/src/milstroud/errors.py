class MilStroudError(Exception):
    pass


class ConfigurationError(MilStroudError, ValueError):
    """Hyperparameters or inputs that cannot work together (e.g. k too large)."""


class ScoringError(MilStroudError):
    pass


class TrainingError(MilStroudError):
    pass


class DataError(MilStroudError, ValueError):
    """Malformed or unusable input data."""


class ExperimentError(MilStroudError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
