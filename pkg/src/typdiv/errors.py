from __future__ import annotations


class TypdivError(Exception):
    """Base class for all errors raised by this package."""


class DataError(TypdivError):
    """An input file or in-memory table violates its documented format."""


class SampleError(TypdivError):
    """A language sample cannot support the requested computation."""


class UnknownCodeError(SampleError):
    def __init__(self, raw: str, message: str | None = None) -> None:
        self.raw = raw
        super().__init__(message or f"unknown language code: {raw!r}")


class CodeShapeError(UnknownCodeError):
    def __init__(self, raw: str) -> None:
        super().__init__(raw, f"{raw!r} is neither a glottocode nor an ISO 639-3 code")


class DegenerateAgreementError(SampleError):
    """Chance agreement is 1, so kappa is undefined."""
