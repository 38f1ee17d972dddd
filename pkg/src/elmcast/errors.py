"""Exception hierarchy shared by every stage of the pipeline."""


class ElmcastError(Exception):
    """Base class for all errors raised by elmcast."""


class SchemaError(ElmcastError):
    """CSV header is missing required columns or repeats one."""


class IntegrityError(ElmcastError):
    """Timestamps are duplicated, out of order or not hour-aligned."""


class UnrecoverableChannelError(ElmcastError):
    """A channel has too few known values to be gap-filled."""


class InsufficientDataError(ElmcastError):
    pass


class SplitError(ElmcastError):
    pass


class ScalerStateError(ElmcastError):
    pass


class DimensionError(ElmcastError):
    pass


class NumericError(ElmcastError):
    pass


class ConfigError(ElmcastError):
    pass


class AlignmentError(ElmcastError):
    pass


class RangeError(ElmcastError):
    pass
