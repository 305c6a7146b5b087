import gzip
import os
from unittest import TestCase, mock

from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from glassbox.envelope import (
    DEFAULT_MAX_PAYLOAD_BYTES,
    KEY_ENV_VAR,
    NONCE_BYTES,
    PROTOCOL_VERSION,
    Compression,
    Encryption,
    SealedEnvelope,
    StreamConfig,
    open_payload,
    seal_payload,
    sealed_size_bound,
)
from glassbox.errors import AuthenticationFailure, DecompressionFailure, MalformedEnvelope, PayloadTooLarge, UnsupportedVersion
from tests.config import CONFIG

KEY_HEX = "00112233445566778899aabbccddeeff" * 2
OTHER_KEY_HEX = "ff" * 32


def _with(env: SealedEnvelope, **changes) -> SealedEnvelope:
    fields = {**env.__dict__, **changes}
    return SealedEnvelope(**fields)


class TestStreamConfig(TestCase):
    def test_key_validation(self):
        self.assertEqual(StreamConfig(key_hex=KEY_HEX).key, bytes.fromhex(KEY_HEX))
        self.assertRaises(ValidationError, StreamConfig)
        self.assertRaises(ValidationError, StreamConfig, key_hex="abcd")
        self.assertRaises(ValidationError, StreamConfig, key_hex="zz" * 32)
        self.assertRaises(ValidationError, StreamConfig, key_hex=KEY_HEX, port=70000)
        self.assertIsNone(StreamConfig(encryption=Encryption.none).key)

    def test_frozen(self):
        cfg = StreamConfig(key_hex=KEY_HEX)
        self.assertRaises(ValidationError, setattr, cfg, "port", 1)

    def test_from_env(self):
        with mock.patch.dict(os.environ, {KEY_ENV_VAR: OTHER_KEY_HEX}):
            self.assertEqual(StreamConfig.from_env().key_hex, OTHER_KEY_HEX)
            self.assertEqual(StreamConfig.from_env(key_hex=KEY_HEX).key_hex, KEY_HEX)
            self.assertEqual(StreamConfig.from_env(port=None).port, StreamConfig(key_hex=KEY_HEX).port)


class TestSealedEnvelope(TestCase):
    def setUp(self):
        self.cfg = StreamConfig(key_hex=KEY_HEX)

    def test_round_trip_through_dict(self):
        env = seal_payload(b'{"X":[1,2]}', self.cfg)
        self.assertEqual(env.compression, Compression.gzip)
        self.assertEqual(len(env.nonce), NONCE_BYTES)
        restored = SealedEnvelope.from_dict(env.to_dict())
        self.assertEqual(open_payload(restored, self.cfg), b'{"X":[1,2]}')

    def test_fresh_nonce_per_message(self):
        a, b = seal_payload(b"same", self.cfg), seal_payload(b"same", self.cfg)
        self.assertNotEqual(a.nonce, b.nonce)
        self.assertNotEqual(a.payload, b.payload)

    def test_every_flipped_byte_fails_authentication(self):
        env = seal_payload(b'{"X":{"a":1}}', StreamConfig(key_hex=KEY_HEX, compression=Compression.none))
        for i in range(len(env.payload)):
            payload = bytearray(env.payload)
            payload[i] ^= 0x01
            self.assertRaises(AuthenticationFailure, open_payload, _with(env, payload=bytes(payload)), self.cfg)
        for i in range(NONCE_BYTES):
            nonce = bytearray(env.nonce)
            nonce[i] ^= 0x80
            self.assertRaises(AuthenticationFailure, open_payload, _with(env, nonce=bytes(nonce)), self.cfg)

    def test_compression_tag_is_authenticated(self):
        env = seal_payload(b"body", self.cfg)
        self.assertRaises(AuthenticationFailure, open_payload, _with(env, compression=Compression.none), self.cfg)

    def test_wrong_key(self):
        env = seal_payload(b"body", self.cfg)
        self.assertRaises(AuthenticationFailure, open_payload, env, StreamConfig(key_hex=OTHER_KEY_HEX))

    def test_encryption_mode_mismatch(self):
        plain = StreamConfig(encryption=Encryption.none)
        self.assertRaises(AuthenticationFailure, open_payload, seal_payload(b"body", plain), self.cfg)
        self.assertRaises(AuthenticationFailure, open_payload, seal_payload(b"body", self.cfg), plain)

    def test_plaintext_mode(self):
        cfg = StreamConfig(encryption=Encryption.none, compression=Compression.none)
        env = seal_payload(b"body", cfg)
        self.assertIsNone(env.nonce)
        self.assertNotIn("nonce", env.to_dict())
        self.assertEqual(env.payload, b"body")
        self.assertEqual(open_payload(env, cfg), b"body")

    def test_unsupported_version(self):
        env = seal_payload(b"body", self.cfg)
        self.assertRaises(UnsupportedVersion, open_payload, _with(env, version=2), self.cfg)

    def test_compression_shrinks_repetitive_body(self):
        body = b"0123456789abcdef" * 640
        self.assertEqual(len(body), 10240)
        compressed = seal_payload(body, self.cfg)
        raw = seal_payload(body, StreamConfig(key_hex=KEY_HEX, compression=Compression.none))
        self.assertLess(len(compressed.payload), len(raw.payload) // 10)

    def test_size_limits(self):
        small = StreamConfig(key_hex=KEY_HEX, max_payload_bytes=1024)
        self.assertRaises(PayloadTooLarge, seal_payload, b"x" * 1025, small)
        # a compressed bomb is stopped while inflating
        bomb = seal_payload(b"\0" * 100_000, StreamConfig(key_hex=KEY_HEX))
        self.assertLess(len(bomb.payload), 1024)
        self.assertRaises(PayloadTooLarge, open_payload, bomb, small)

    def test_body_at_the_limit_round_trips(self):
        body = os.urandom(DEFAULT_MAX_PAYLOAD_BYTES)
        env = seal_payload(body, self.cfg)
        self.assertGreater(len(env.payload), len(body))
        self.assertLessEqual(len(env.payload), sealed_size_bound(len(body)))
        self.assertEqual(open_payload(env, self.cfg), body)
        small = StreamConfig(key_hex=KEY_HEX, max_payload_bytes=1024)
        body = os.urandom(1024)
        self.assertEqual(open_payload(seal_payload(body, small), small), body)

    def test_oversized_sealed_payload_rejected_before_decryption(self):
        small = StreamConfig(key_hex=KEY_HEX, max_payload_bytes=1024)
        env = SealedEnvelope(PROTOCOL_VERSION, Compression.gzip, Encryption.aead, os.urandom(NONCE_BYTES), b"\0" * (sealed_size_bound(1024) + 1))
        self.assertRaises(PayloadTooLarge, open_payload, env, small)

    def test_authenticated_garbage_does_not_inflate(self):
        nonce = os.urandom(NONCE_BYTES)
        aad = bytes([PROTOCOL_VERSION]) + b"gzip"
        ciphertext = AESGCM(self.cfg.key).encrypt(nonce, b"not gzip at all", aad)
        env = SealedEnvelope(PROTOCOL_VERSION, Compression.gzip, Encryption.aead, nonce, ciphertext)
        self.assertRaises(DecompressionFailure, open_payload, env, self.cfg)
        truncated = AESGCM(self.cfg.key).encrypt(nonce, gzip.compress(b"ok")[:-4], aad)
        self.assertRaises(DecompressionFailure, open_payload, _with(env, payload=truncated), self.cfg)

    def test_malformed_records(self):
        good = seal_payload(b"body", self.cfg).to_dict()
        self.assertRaises(MalformedEnvelope, SealedEnvelope.from_dict, [])
        self.assertRaises(MalformedEnvelope, SealedEnvelope.from_dict, {k: v for k, v in good.items() if k != "payload"})
        self.assertRaises(MalformedEnvelope, SealedEnvelope.from_dict, {**good, "payload": "%%%"})
        self.assertRaises(MalformedEnvelope, SealedEnvelope.from_dict, {**good, "compression": "brotli"})
        self.assertRaises(MalformedEnvelope, SealedEnvelope.from_dict, {**good, "version": "1"})
        self.assertRaises(MalformedEnvelope, SealedEnvelope.from_dict, {k: v for k, v in good.items() if k != "nonce"})

    @settings(max_examples=CONFIG.HYPOTHESIS_EXAMPLES, deadline=None)
    @given(st.binary(max_size=4096), st.sampled_from(list(Compression)))
    def test_seal_open_round_trip(self, body, compression):
        cfg = StreamConfig(key_hex=KEY_HEX, compression=compression)
        self.assertEqual(open_payload(SealedEnvelope.from_dict(seal_payload(body, cfg).to_dict()), cfg), body)
