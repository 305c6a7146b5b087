from typing import Any, List, Optional


class GlassboxError(Exception):
    """Root of every error raised by glassbox."""


# --- document format ---------------------------------------------------------------------------------------------------


class FormatError(GlassboxError, ValueError):
    pass


class MissingKey(FormatError):
    def __init__(self, key: str, path: str = "") -> None:
        self.key = key
        self.path = path
        super().__init__(f"missing key {key!r}" + (f" at {path}" if path else ""))


class DTypeUnknown(FormatError):
    pass


class ShapeMismatch(FormatError):
    pass


class UnknownTypeTag(FormatError):
    pass


class ParseFailure(FormatError):
    pass


class MissingEnvelopeKey(FormatError):
    pass


class MalformedEnvelope(FormatError):
    pass


class UnsupportedStructure(GlassboxError, TypeError):
    def __init__(self, path: str, kind: str, detail: str = "") -> None:
        self.path = path
        self.kind = kind
        msg = f"no transporter claims {kind} at {path or '<root>'}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class UnknownCategory(GlassboxError, ValueError):
    pass


class UnknownModelType(GlassboxError, ValueError):
    pass


class VersionMismatch(GlassboxError, ValueError):
    pass


class InvalidKey(GlassboxError, ValueError):
    pass


class IoFailure(GlassboxError, OSError):
    pass


# --- models ------------------------------------------------------------------------------------------------------------


class ModelError(GlassboxError, ValueError):
    pass


class NotFitted(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class EmptyDataset(ModelError):
    pass


class NotBinary(ModelError):
    pass


class TooFewSamples(ModelError):
    pass


class EmptyClass(ModelError):
    pass


class FeatureCountMismatch(ModelError):
    pass


class MissingField(ModelError):
    def __init__(self, field: str) -> None:
        self.field = field
        super().__init__(field)


class InvariantViolation(ModelError):
    pass


# --- metrics -----------------------------------------------------------------------------------------------------------


class LengthMismatch(GlassboxError, ValueError):
    pass


class UndefinedMetric(GlassboxError, ValueError):
    pass


# --- streaming ---------------------------------------------------------------------------------------------------------


class StreamError(GlassboxError):
    KIND = "internal"
    STATUS = 500


class PayloadTooLarge(StreamError):
    KIND = "payload_too_large"
    STATUS = 413


class AuthenticationFailure(StreamError):
    KIND = "authentication"
    STATUS = 401


class DecompressionFailure(StreamError):
    KIND = "decompression"
    STATUS = 400


class UnsupportedVersion(StreamError):
    KIND = "unsupported_version"
    STATUS = 400


class TransportFailure(StreamError):
    KIND = "transport"
    STATUS = 502


class BindFailure(StreamError):
    pass


class ModelLoadFailure(StreamError):
    pass


class RemoteError(StreamError):
    """An error reported by the server, relayed to the client."""

    KIND = "remote"

    def __init__(self, message: str, kind: Optional[str] = None, status: Optional[int] = None) -> None:
        super().__init__(message)
        self.message = message
        self.kind = kind or self.KIND
        self.status = status or self.STATUS


class UnknownAttribute(RemoteError):
    KIND = "unknown_attribute"
    STATUS = 404


class InvalidArgs(RemoteError):
    KIND = "invalid_args"
    STATUS = 400


class NoHostedModel(RemoteError):
    KIND = "no_model"
    STATUS = 404


class ValidationRejected(RemoteError):
    KIND = "validation_rejected"
    STATUS = 400

    def __init__(self, message: str, findings: Optional[List[Any]] = None, kind: Optional[str] = None, status: Optional[int] = None) -> None:
        super().__init__(message, kind, status)
        self.findings = list(findings or [])
