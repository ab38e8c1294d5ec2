"""Exception hierarchy shared across the package.

Two broad families matter for the CLI exit-code contract: ConfigError (bad
invocation or configuration, exit 2) and DataError (unusable input data,
exit 3). Anything else is an internal error (exit 4).
"""
from __future__ import annotations


class AlignImpactError(Exception):
    """Base class for all package errors."""


class ConfigError(AlignImpactError):
    """Invalid configuration or command-line usage."""


class InvalidConfig(ConfigError):
    """A structured config object failed validation."""


class DataError(AlignImpactError):
    """Input data cannot be used as supplied."""


class MalformedLine(DataError):
    """A text input line violates its grammar."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class DuplicatePair(DataError):
    """Two correspondences share the same (left, right) concept pair."""

    def __init__(self, left: str, right: str):
        super().__init__(f"duplicate correspondence pair ({left}, {right})")
        self.left = left
        self.right = right


class UnknownNode(DataError):
    """A node id or term is not part of the graph."""


class InconsistentInput(DataError):
    """Cross-references between inputs do not line up."""


class EmptyVocab(DataError):
    """No token survived the minimum-count filter."""


class EmptyCorpus(DataError):
    """The walk corpus holds nothing trainable."""


class OutOfVocabulary(DataError):
    """A token has no embedding vector."""

    def __init__(self, token: str):
        super().__init__(f"token not in vocabulary: {token!r}")
        self.token = token


class DegenerateData(DataError):
    """Training rows are identical but their labels conflict."""


class DimensionMismatch(DataError):
    """A feature vector does not match the trained dimensionality."""
