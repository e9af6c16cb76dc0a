"""Exception taxonomy shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class SpikecoreError(Exception):
    """Base class for every error raised by this package."""


class NetworkSyntaxError(SpikecoreError):
    """The network document is not syntactically well formed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class SchemaError(SpikecoreError):
    """The document parses but violates the network file schema."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class RasterSyntaxError(SpikecoreError):
    """A spike-train document line is malformed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


# Violation kinds reported by network validation.
DANGLING_TARGET = "dangling-target"
DUPLICATE_KEY = "duplicate-key"
WEIGHT_OUT_OF_RANGE = "weight-out-of-range"
UNKNOWN_OUTPUT = "unknown-output"
EMPTY_NETWORK = "empty-network"
MODEL_OUT_OF_RANGE = "model-out-of-range"
BAD_KEY = "bad-key"
TOO_MANY_MODELS = "too-many-models"


@dataclass(frozen=True)
class Violation:
    """One structural rule broken by a network definition."""

    kind: str
    subject: tuple
    detail: str = ""

    def __str__(self) -> str:
        head = f"{self.kind}{self.subject!r}"
        return f"{head}: {self.detail}" if self.detail else head


class NetworkValidationError(SpikecoreError):
    """Raised with the full list of violations found in one pass."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


class CapacityExceeded(SpikecoreError):
    def __init__(self, needed: int, available: int):
        self.needed = needed
        self.available = available
        super().__init__(f"need {needed} neuron slots, only {available} available")


class SynapseRegionOverflow(SpikecoreError):
    def __init__(self, rows_needed: int, rows_available: int):
        self.rows_needed = rows_needed
        self.rows_available = rows_available
        super().__init__(
            f"synapse region needs {rows_needed} rows, only {rows_available} available"
        )


class NoSuchSynapse(SpikecoreError):
    def __init__(self, pre, post):
        self.pre = pre
        self.post = post
        super().__init__(f"no synapse from {pre!r} to {post!r}")


class InputOutOfRange(SpikecoreError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"axon index {index} out of range")


class UnknownKey(SpikecoreError):
    def __init__(self, namespace: str, key: str):
        self.namespace = namespace
        self.key = key
        super().__init__(f"unknown {namespace} key {key!r}")


class TopologyMismatch(SpikecoreError):
    pass


class InvalidCostModel(SpikecoreError):
    pass


class ImageFormatError(SpikecoreError):
    """A memory-image blob is truncated or has bad framing."""
