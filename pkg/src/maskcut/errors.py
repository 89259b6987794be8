"""Exception hierarchy shared by every pipeline stage."""


class MaskcutError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class DecodeError(MaskcutError):
    pass


class ProviderInitError(MaskcutError):
    pass


class AnnotationFormatError(MaskcutError):
    pass


class DegeneratePolygonError(MaskcutError):
    pass


class ShapeError(MaskcutError):
    pass


class EmptyMaskError(MaskcutError):
    pass


class NoFaceError(MaskcutError):
    pass


class LayoutError(MaskcutError):
    pass


class EmptyDatasetError(MaskcutError):
    pass


class RatioError(MaskcutError):
    pass


class DataError(MaskcutError):
    pass


class LabelError(MaskcutError):
    pass


class WeightLoadError(MaskcutError):
    pass


class TrainingDivergedError(MaskcutError):
    pass


class InputError(MaskcutError):
    pass


class CapabilityError(MaskcutError):
    pass


class ConfigError(MaskcutError):
    pass


class ParseError(MaskcutError):
    pass
