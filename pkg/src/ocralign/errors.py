"""Exception hierarchy shared by every ocralign module."""


class OcrAlignError(Exception):
    """Base class for all errors raised by ocralign."""


class FormatError(OcrAlignError, ValueError):
    """Input bytes do not follow the expected layout."""


class RowError(FormatError):
    """A single record (row, element, list entry) is invalid.

    ``line`` is a 1-based line number for text formats or a location string
    such as a JSON path.
    """

    def __init__(self, message, line=None):
        self.line = line
        if isinstance(line, int):
            message = f"line {line}: {message}"
        elif line is not None:
            message = f"{line}: {message}"
        super().__init__(message)


class MissingPageGeometryError(FormatError):
    """The input never states the page dimensions."""


class GeometryError(OcrAlignError, ValueError):
    pass


class PointAtInfinityError(GeometryError):
    pass


class SingularMatrixError(GeometryError):
    pass


class ZeroMatrixError(GeometryError):
    pass


class DegenerateConfigurationError(GeometryError):
    """Point configuration cannot determine a homography."""


class RankDeficientError(DegenerateConfigurationError):
    """DLT null space is not one-dimensional."""


class EstimationError(OcrAlignError):
    pass


class InsufficientMatchesError(EstimationError):
    pass


class NoModelError(EstimationError):
    """Every sampled subset was degenerate."""


class SizeGuardError(EstimationError, ValueError):
    pass


class EmptyInputError(OcrAlignError, ValueError):
    pass


class PlacementError(OcrAlignError):
    """Synthetic layout could not place all words without overlap."""


class UnsupportedMaxvalError(FormatError):
    pass
