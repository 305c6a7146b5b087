"""
Detached Ed25519 signatures over the canonical bytes of a model document.

A signature authenticates the publisher. It says nothing about whether the content is safe to load; that guarantee comes
from the data-only format and `validate_document`, which are independent of signing.
"""
import base64
import binascii
import hashlib
import logging
from dataclasses import dataclass
from typing import Dict, Union

from cryptography.exceptions import InvalidSignature, UnsupportedAlgorithm
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from glassbox.errors import InvalidKey, MalformedEnvelope
from glassbox.tensors import Node, canonical_bytes, parse, render_pretty
from glassbox.transport import ModelDocument, PathLike, read_bytes, write_text_atomic

logger = logging.getLogger(__name__)

ED25519_SCHEME = "ed25519"
KEY_BYTES = 32

SCHEME_KEY = "scheme"
FINGERPRINT_KEY = "public_key_fingerprint"
SIGNATURE_KEY = "signature"
DOCUMENT_KEY = "document"

SigningKeyLike = Union[Ed25519PrivateKey, bytes]
VerifyKeyLike = Union[Ed25519PublicKey, bytes]


def _raw_public(key: Ed25519PublicKey) -> bytes:
    return key.public_bytes(encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw)


def fingerprint(public_key: VerifyKeyLike) -> str:
    """Hex SHA-256 of the raw 32-byte public key."""
    return hashlib.sha256(_raw_public(_as_verify_key(public_key))).hexdigest()


def _as_signing_key(key: SigningKeyLike) -> Ed25519PrivateKey:
    if isinstance(key, Ed25519PrivateKey):
        return key
    if isinstance(key, (bytes, bytearray)) and len(key) == KEY_BYTES:
        return Ed25519PrivateKey.from_private_bytes(bytes(key))
    raise InvalidKey(f"expected an Ed25519 private key or {KEY_BYTES} raw bytes, got {type(key).__name__}")


def _as_verify_key(key: VerifyKeyLike) -> Ed25519PublicKey:
    if isinstance(key, Ed25519PublicKey):
        return key
    if isinstance(key, (bytes, bytearray)) and len(key) == KEY_BYTES:
        try:
            return Ed25519PublicKey.from_public_bytes(bytes(key))
        except ValueError as exc:
            raise InvalidKey(f"not a valid Ed25519 public key: {exc}") from exc
    raise InvalidKey(f"expected an Ed25519 public key or {KEY_BYTES} raw bytes, got {type(key).__name__}")


@dataclass(frozen=True)
class SignedEnvelope:
    """
    :param document_bytes: canonical bytes of the signed document; exactly the bytes the signature covers
    """

    document_bytes: bytes
    signature: bytes
    public_key_fingerprint: str
    scheme: str = ED25519_SCHEME

    def document(self) -> ModelDocument:
        return ModelDocument.from_node(parse(self.document_bytes))

    def to_node(self) -> Dict[str, Node]:
        return {
            SCHEME_KEY: self.scheme,
            FINGERPRINT_KEY: self.public_key_fingerprint,
            SIGNATURE_KEY: base64.b64encode(self.signature).decode("ascii"),
            DOCUMENT_KEY: parse(self.document_bytes),
        }

    @classmethod
    def from_node(cls, node: Node) -> "SignedEnvelope":
        """
        The embedded document is re-canonicalized, so re-indenting a signed file does not break its signature.

        :raises MalformedEnvelope: on a missing key, a wrongly typed value or undecodable base64
        """
        if not isinstance(node, dict):
            raise MalformedEnvelope("signed file must be a map")
        for key in (SCHEME_KEY, FINGERPRINT_KEY, SIGNATURE_KEY, DOCUMENT_KEY):
            if key not in node:
                raise MalformedEnvelope(f"signed file lacks {key!r}")
        for key in (SCHEME_KEY, FINGERPRINT_KEY, SIGNATURE_KEY):
            if not isinstance(node[key], str):
                raise MalformedEnvelope(f"{key!r} must be a string")
        if not isinstance(node[DOCUMENT_KEY], dict):
            raise MalformedEnvelope(f"{DOCUMENT_KEY!r} must be a map")
        try:
            signature = base64.b64decode(node[SIGNATURE_KEY], validate=True)
        except binascii.Error as exc:
            raise MalformedEnvelope(f"signature is not valid base64: {exc}") from exc
        try:
            document_bytes = canonical_bytes(node[DOCUMENT_KEY])
        except (TypeError, ValueError) as exc:
            raise MalformedEnvelope(f"embedded document is not canonicalizable: {exc}") from exc
        return cls(document_bytes=document_bytes, signature=signature, public_key_fingerprint=node[FINGERPRINT_KEY], scheme=node[SCHEME_KEY])


def sign_document(doc: ModelDocument, secret_key: SigningKeyLike) -> SignedEnvelope:
    """
    :raises InvalidKey: if secret_key is not an Ed25519 private key
    """
    key = _as_signing_key(secret_key)
    document_bytes = doc.canonical_bytes()
    return SignedEnvelope(
        document_bytes=document_bytes,
        signature=key.sign(document_bytes),
        public_key_fingerprint=fingerprint(key.public_key()),
        scheme=ED25519_SCHEME,
    )


def verify_document(env: SignedEnvelope, public_key: VerifyKeyLike) -> bool:
    """
    Checks the signature only; the document bytes are never parsed here.

    :raises MalformedEnvelope: if the envelope names an unsupported scheme
    :raises InvalidKey: if public_key is not an Ed25519 public key
    """
    if env.scheme != ED25519_SCHEME:
        raise MalformedEnvelope(f"unsupported signature scheme {env.scheme!r}")
    key = _as_verify_key(public_key)
    if env.public_key_fingerprint != fingerprint(key):
        logger.debug("fingerprint %s does not match the verifying key", env.public_key_fingerprint)
        return False
    try:
        key.verify(env.signature, env.document_bytes)
    except InvalidSignature:
        return False
    return True


def save_signed(env: SignedEnvelope, path: PathLike) -> None:
    write_text_atomic(path, render_pretty(env.to_node()) + "\n")


def load_signed(path: PathLike) -> SignedEnvelope:
    """
    :raises IoFailure, ParseFailure, MalformedEnvelope:
    """
    return SignedEnvelope.from_node(parse(read_bytes(path)))


def _key_material(path: PathLike) -> bytes:
    raw = read_bytes(path)
    if raw.lstrip().startswith(b"-----BEGIN"):
        return raw
    if len(raw) == KEY_BYTES:
        return raw
    try:
        decoded = bytes.fromhex(raw.decode("ascii").strip())
    except (UnicodeDecodeError, ValueError):
        decoded = b""
    if len(decoded) != KEY_BYTES:
        raise InvalidKey(f"{path}: expected a PEM key, {KEY_BYTES} raw bytes or {2 * KEY_BYTES} hex digits")
    return decoded


def load_signing_key(path: PathLike) -> Ed25519PrivateKey:
    """Reads an unencrypted PEM (PKCS#8) private key, 32 raw bytes, or their hex form."""
    material = _key_material(path)
    if len(material) == KEY_BYTES:
        return Ed25519PrivateKey.from_private_bytes(material)
    try:
        key = serialization.load_pem_private_key(material, password=None)
    except (ValueError, TypeError, UnsupportedAlgorithm) as exc:
        raise InvalidKey(f"{path}: cannot load private key: {exc}") from exc
    if not isinstance(key, Ed25519PrivateKey):
        raise InvalidKey(f"{path}: not an Ed25519 private key")
    return key


def load_verify_key(path: PathLike) -> Ed25519PublicKey:
    """Reads a PEM (SubjectPublicKeyInfo) public key, 32 raw bytes, or their hex form."""
    material = _key_material(path)
    if len(material) == KEY_BYTES:
        return _as_verify_key(material)
    try:
        key = serialization.load_pem_public_key(material)
    except (ValueError, UnsupportedAlgorithm) as exc:
        raise InvalidKey(f"{path}: cannot load public key: {exc}") from exc
    if not isinstance(key, Ed25519PublicKey):
        raise InvalidKey(f"{path}: not an Ed25519 public key")
    return key

