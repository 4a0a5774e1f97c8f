"""Exception hierarchy shared by the library and the command-line front end."""


class EBPredError(Exception):
    """Base class. ``code`` is the machine-parsable tag printed by the CLI."""

    code = "Error"


class SingularDesign(EBPredError):
    code = "SingularDesign"


class DimensionMismatch(EBPredError, ValueError):
    code = "DimensionMismatch"


class ModeMismatch(EBPredError):
    code = "ModeMismatch"


class TooLarge(EBPredError):
    code = "TooLarge"


class EmptyChain(EBPredError):
    code = "EmptyChain"


class ConfigError(EBPredError, ValueError):
    code = "ConfigError"


class TooFewDraws(EBPredError, ValueError):
    code = "TooFewDraws"


class ParseError(EBPredError, ValueError):
    code = "ParseError"

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column


class RaggedRows(ParseError):
    code = "RaggedRows"


class NonNumericCell(ParseError):
    code = "NonNumericCell"
