class OcrForgeError(Exception):
    """Bad input or configuration; the CLI maps it to exit status 1."""


class CorpusError(OcrForgeError):
    pass


class TableFormatError(OcrForgeError):
    pass


class AlignmentTooLarge(OcrForgeError):
    pass


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (CLI exit status 2)."""
