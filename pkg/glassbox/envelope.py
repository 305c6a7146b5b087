"""
The sealed wire frame of the streaming protocol: compress, then encrypt with AES-256-GCM on send; authenticate and
decrypt, then decompress on receive.
"""
import base64
import binascii
import gzip
import os
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from pydantic import BaseModel, ConfigDict, Field, model_validator
from strenum import StrEnum

from glassbox.errors import AuthenticationFailure, DecompressionFailure, MalformedEnvelope, PayloadTooLarge, UnsupportedVersion

PROTOCOL_VERSION = 1
NONCE_BYTES = 12
KEY_BYTES = 32
KEY_ENV_VAR = "MILO_STREAM_KEY"

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8000
DEFAULT_MAX_PAYLOAD_BYTES = 16 * 1024 * 1024

_GZIP_WRAPPER_BYTES = 18
_GCM_TAG_BYTES = 16
# version, modes and base64 nonce of a JSON envelope record
_RECORD_HEADER_BYTES = 256


class Compression(StrEnum):
    none = "none"
    gzip = "gzip"


class Encryption(StrEnum):
    none = "none"
    aead = "aead"


class StreamConfig(BaseModel):
    """
    Settings shared by the streaming server and client. Both sides must hold the same pre-shared key.
    Compression applies to what this side sends; received envelopes declare their own.
    """

    model_config = ConfigDict(frozen=True)

    host: str = DEFAULT_HOST
    port: int = Field(default=DEFAULT_PORT, ge=0, le=65535)
    key_hex: Optional[str] = None
    compression: Compression = Compression.gzip
    encryption: Encryption = Encryption.aead
    max_payload_bytes: int = Field(default=DEFAULT_MAX_PAYLOAD_BYTES, gt=0)
    document_path: Optional[Path] = None

    @model_validator(mode="after")
    def _check_key(self) -> "StreamConfig":
        if self.key_hex is not None:
            try:
                key = bytes.fromhex(self.key_hex)
            except ValueError:
                raise ValueError("key_hex must be hexadecimal") from None
            if len(key) != KEY_BYTES:
                raise ValueError(f"key_hex must encode exactly {KEY_BYTES} bytes, got {len(key)}")
        elif self.encryption is Encryption.aead:
            raise ValueError(f"aead encryption needs a {KEY_BYTES}-byte key_hex (or {KEY_ENV_VAR})")
        return self

    @property
    def key(self) -> Optional[bytes]:
        return None if self.key_hex is None else bytes.fromhex(self.key_hex)

    @classmethod
    def from_env(cls, **overrides: Any) -> "StreamConfig":
        """Fills key_hex from MILO_STREAM_KEY unless given explicitly."""
        if overrides.get("key_hex") is None and os.environ.get(KEY_ENV_VAR):
            overrides["key_hex"] = os.environ[KEY_ENV_VAR].strip()
        return cls(**{k: v for k, v in overrides.items() if v is not None})


@dataclass(frozen=True)
class SealedEnvelope:
    version: int
    compression: Compression
    encryption: Encryption
    nonce: Optional[bytes]
    payload: bytes

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"version": self.version, "compression": str(self.compression), "encryption": str(self.encryption)}
        if self.nonce is not None:
            out["nonce"] = base64.b64encode(self.nonce).decode("ascii")
        out["payload"] = base64.b64encode(self.payload).decode("ascii")
        return out

    @classmethod
    def from_dict(cls, node: Any) -> "SealedEnvelope":
        """
        :raises MalformedEnvelope: if the record does not have the envelope schema
        """
        if not isinstance(node, dict):
            raise MalformedEnvelope("sealed envelope must be a map")
        for key in ("version", "compression", "encryption", "payload"):
            if key not in node:
                raise MalformedEnvelope(f"sealed envelope lacks {key!r}")
        version = node["version"]
        if type(version) is not int:
            raise MalformedEnvelope(f"envelope version must be an integer, got {version!r}")
        try:
            compression = Compression(node["compression"])
            encryption = Encryption(node["encryption"])
        except ValueError as exc:
            raise MalformedEnvelope(str(exc)) from None
        nonce = node.get("nonce")
        if (nonce is not None) != (encryption is Encryption.aead):
            raise MalformedEnvelope("nonce must be present exactly when encryption is aead")
        return cls(
            version=version,
            compression=compression,
            encryption=encryption,
            nonce=None if nonce is None else _b64(nonce, "nonce"),
            payload=_b64(node["payload"], "payload"),
        )


def _b64(text: Any, what: str) -> bytes:
    if not isinstance(text, str):
        raise MalformedEnvelope(f"{what} must be a base64 string")
    try:
        return base64.b64decode(text, validate=True)
    except binascii.Error as exc:
        raise MalformedEnvelope(f"{what} is not valid base64: {exc}") from None


def _associated_data(version: int, compression: Compression) -> bytes:
    return bytes([version & 0xFF]) + str(compression).encode("ascii")


def sealed_size_bound(n: int) -> int:
    """Largest sealed payload a body of n bytes can produce: zlib's conservative deflate bound plus gzip and GCM framing."""
    return n + ((n + 7) >> 3) + ((n + 63) >> 6) + 5 + _GZIP_WRAPPER_BYTES + _GCM_TAG_BYTES


def record_size_bound(n: int) -> int:
    """Largest JSON envelope record carrying a body of n bytes: the base64 payload plus the fixed header fields."""
    return 4 * -(-sealed_size_bound(n) // 3) + _RECORD_HEADER_BYTES


def seal_payload(body: bytes, cfg: StreamConfig) -> SealedEnvelope:
    """
    :raises PayloadTooLarge: if body exceeds cfg.max_payload_bytes
    """
    if len(body) > cfg.max_payload_bytes:
        raise PayloadTooLarge(f"body of {len(body)} bytes exceeds the {cfg.max_payload_bytes}-byte limit")
    data = gzip.compress(body, mtime=0) if cfg.compression is Compression.gzip else bytes(body)
    if cfg.encryption is Encryption.none:
        return SealedEnvelope(PROTOCOL_VERSION, cfg.compression, Encryption.none, None, data)
    nonce = os.urandom(NONCE_BYTES)
    ciphertext = AESGCM(cfg.key).encrypt(nonce, data, _associated_data(PROTOCOL_VERSION, cfg.compression))
    return SealedEnvelope(PROTOCOL_VERSION, cfg.compression, Encryption.aead, nonce, ciphertext)


def _gunzip_bounded(data: bytes, limit: int) -> bytes:
    inflater = zlib.decompressobj(wbits=16 + zlib.MAX_WBITS)
    try:
        out = inflater.decompress(data, limit + 1)
    except zlib.error as exc:
        raise DecompressionFailure(f"payload is not valid gzip: {exc}") from None
    if len(out) > limit:
        raise PayloadTooLarge(f"decompressed payload exceeds the {limit}-byte limit")
    if not inflater.eof:
        raise DecompressionFailure("gzip stream is truncated")
    return out


def open_payload(env: SealedEnvelope, cfg: StreamConfig) -> bytes:
    """
    Authentication happens before any decompression, so no attacker-controlled byte is interpreted unauthenticated.

    :raises UnsupportedVersion: for a protocol version other than 1
    :raises AuthenticationFailure: on a wrong key, tampering, or an encryption mode that differs from cfg's
    :raises DecompressionFailure: if an authenticated payload does not inflate
    :raises PayloadTooLarge: if the payload exceeds cfg.max_payload_bytes, before or after inflation
    """
    if env.version != PROTOCOL_VERSION:
        raise UnsupportedVersion(f"unsupported protocol version {env.version}, expected {PROTOCOL_VERSION}")
    if env.encryption is not cfg.encryption:
        raise AuthenticationFailure(f"envelope encryption {env.encryption} does not match the configured {cfg.encryption}")
    if len(env.payload) > sealed_size_bound(cfg.max_payload_bytes):
        raise PayloadTooLarge(f"sealed payload of {len(env.payload)} bytes exceeds the limit")

    data = env.payload
    if env.encryption is Encryption.aead:
        if env.nonce is None or len(env.nonce) != NONCE_BYTES:
            raise AuthenticationFailure(f"aead envelopes need a {NONCE_BYTES}-byte nonce")
        try:
            data = AESGCM(cfg.key).decrypt(env.nonce, data, _associated_data(env.version, env.compression))
        except InvalidTag:
            raise AuthenticationFailure("payload failed authentication") from None

    if env.compression is Compression.gzip:
        return _gunzip_bounded(data, cfg.max_payload_bytes)
    if len(data) > cfg.max_payload_bytes:
        raise PayloadTooLarge(f"payload of {len(data)} bytes exceeds the {cfg.max_payload_bytes}-byte limit")
    return data
