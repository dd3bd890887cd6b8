"""Exception hierarchy shared across the package."""


class ReadiError(Exception):
    """Base class for every error raised by readi."""


class DataError(ReadiError):
    """Bad input data: malformed files, misaligned datasets."""


class LoadError(DataError):
    pass


class ReportError(DataError):
    pass


class IndexBuildError(ReadiError):
    pass


class PathParseError(ReadiError):
    pass


class RenderError(ReadiError):
    pass


class GatewayError(ReadiError):
    pass
