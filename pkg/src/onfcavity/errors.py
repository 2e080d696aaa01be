"""Exception hierarchy shared by every module of the toolkit."""


class CavityError(ValueError):
    """Base class for all toolkit errors."""


class InvalidRates(CavityError):
    pass


class InvalidInput(CavityError):
    pass


class InvalidDesign(CavityError):
    pass


class TuningOutOfRange(CavityError):
    pass


class SingularStack(CavityError):
    pass


class NumericalOverflow(CavityError, ArithmeticError):
    pass


class NoBandFound(CavityError):
    pass


class NoDipFound(CavityError):
    pass


class DegenerateWindow(CavityError):
    pass


class EmptyInput(CavityError):
    pass


class DegenerateFit(CavityError):
    pass


class InvalidRange(CavityError):
    pass


class InsufficientData(CavityError):
    pass


class DidNotConverge(RuntimeWarning):
    """Issued when a fit stops at the iteration cap; the best iterate is still returned."""


class FileFormatError(CavityError):
    """Error tied to a location in an input file.

    ``path`` and ``line`` are kept on the instance so the CLI can name them.
    """

    def __init__(self, message, path=None, line=None, key=None):
        self.path = path
        self.line = line
        self.key = key
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ParseError(FileFormatError):
    pass


class ValidationError(FileFormatError):
    pass


class UnknownKey(FileFormatError):
    pass


class NonMonotonicGrid(FileFormatError):
    pass


class EmptyFile(FileFormatError):
    pass
