"""Exception hierarchy shared across the package."""


class PrecipmergeError(Exception):
    """Base class for all errors raised by precipmerge."""


class ConfigError(PrecipmergeError):
    """Invalid or inconsistent run configuration."""


class ParseError(PrecipmergeError):
    """A malformed input file.

    Carries the source path and 1-based line number when known so CLI
    messages can point at the offending line.
    """

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where += f"{line_no}:"
        super().__init__(f"{where} {message}" if where else message)


class DataError(PrecipmergeError):
    """Structurally valid inputs that cannot support the requested run
    (empty station set, undefined reference score, degenerate folds...)."""
