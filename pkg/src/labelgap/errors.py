"""Exception types raised across the pipeline."""


class LabelGapError(Exception):
    """Base class for all errors raised by this package."""


class CollinearReference(LabelGapError):
    pass


class DegenerateAngle(LabelGapError):
    pass


class TooShort(LabelGapError):
    pass


class InvalidTrajectory(LabelGapError):
    pass


class ZeroSignal(LabelGapError):
    pass


class DegenerateMove(LabelGapError):
    pass


class DegenerateSegment(LabelGapError):
    pass


class EmptyTrainingSet(LabelGapError):
    pass


class EmptyData(LabelGapError):
    pass


class SingleClass(LabelGapError):
    pass


class DimensionMismatch(LabelGapError):
    pass


class TooFewSamples(LabelGapError):
    pass


class LengthMismatch(LabelGapError):
    pass


class InvalidConfig(LabelGapError):
    pass


class MissingDataset(LabelGapError):
    pass


class ParseError(LabelGapError):
    """Malformed input file; carries the offending path and 1-based line."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        super().__init__(f"{self.path}:{line}: {message}")
