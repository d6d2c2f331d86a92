"""Exception types raised across the package."""

from __future__ import annotations


class DxPrivacyError(Exception):
    """Base class for all package errors."""


class EmbeddingParseError(DxPrivacyError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatchError(DxPrivacyError):
    def __init__(self, expected: int, got: int, line: int | None = None) -> None:
        self.expected = expected
        self.got = got
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}expected dimension {expected}, got {got}")


class DuplicateTokenError(DxPrivacyError):
    def __init__(self, token: str, line: int | None = None) -> None:
        self.token = token
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}duplicate token {token!r}")


class IncompatibleCacheError(DxPrivacyError):
    """Cache file has the wrong magic bytes or an unknown format version."""


class CacheCorruptionError(DxPrivacyError):
    """Cache file is truncated or has trailing garbage."""


class WordNotFoundError(DxPrivacyError, KeyError):
    def __init__(self, word: str, position: int | None = None) -> None:
        self.word = word
        self.position = position
        super().__init__(word)

    def __str__(self) -> str:
        if self.position is None:
            return f"word not in vocabulary: {self.word!r}"
        return f"word not in vocabulary at position {self.position}: {self.word!r}"
