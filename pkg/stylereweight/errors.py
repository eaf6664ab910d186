from typing import Optional


class StyleReweightError(Exception):
    """Marker base for every error raised by this package."""


class DimensionError(StyleReweightError, ValueError):
    pass


class DomainError(StyleReweightError, ValueError):
    pass


class DegenerateRowError(DomainError):
    pass


class SingularStepError(DomainError):
    pass


class ConfigError(StyleReweightError, ValueError):
    pass


class ContractError(StyleReweightError, ValueError):
    pass


class TrainingError(StyleReweightError, RuntimeError):
    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


class ImageFormatError(StyleReweightError, OSError):
    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)
        self.offset = offset
