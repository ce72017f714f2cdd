"""Exception hierarchy shared by all texfeat modules."""


class TexfeatError(Exception):
    """Base class for every error raised on purpose by texfeat."""


class ImageFormatError(TexfeatError):
    pass


class DimensionError(TexfeatError):
    pass


class DatasetError(TexfeatError):
    pass


class ParameterError(TexfeatError, ValueError):
    pass


class EmptyInputError(TexfeatError):
    pass


class DegenerateImageError(TexfeatError):
    """No valid pixel pairs exist for the requested GLCM offset."""


class StatisticsError(TexfeatError):
    pass


class SplitError(TexfeatError):
    pass


class FeatureFormatError(TexfeatError):
    pass


class ModelFormatError(TexfeatError):
    pass


class ConfigMismatchError(TexfeatError):
    pass
