import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Type

import numpy as np
import requests

from glassbox.envelope import SealedEnvelope, StreamConfig, open_payload, seal_payload
from glassbox.errors import (
    AuthenticationFailure,
    DecompressionFailure,
    FormatError,
    InvalidArgs,
    NoHostedModel,
    PayloadTooLarge,
    RemoteError,
    StreamError,
    TransportFailure,
    UnknownAttribute,
    UnsupportedVersion,
    ValidationRejected,
)
from glassbox.tensors import Node, canonical_bytes, decode_tensor, encode_tensor, parse
from glassbox.transport import ModelDocument
from glassbox.validation import Finding, Severity

DEFAULT_TIMEOUT = 30.0

_REMOTE_KINDS: Dict[str, Type[RemoteError]] = {cls.KIND: cls for cls in (UnknownAttribute, InvalidArgs, NoHostedModel, ValidationRejected)}
_STREAM_KINDS: Dict[str, Type[StreamError]] = {cls.KIND: cls for cls in (PayloadTooLarge, AuthenticationFailure, DecompressionFailure, UnsupportedVersion)}


@dataclass(frozen=True)
class RemoteCall:
    """
    :param attribute: the model attribute to run on the server; must be on the hosted model's allow-list
    :param args: argument map; tensors in their document encoding
    """

    attribute: str
    args: Dict[str, Node] = field(default_factory=dict)

    @classmethod
    def build(cls, attribute: str, **args: Any) -> "RemoteCall":
        return cls(attribute=attribute, args={name: encode_tensor(np.asarray(v)) if isinstance(v, (np.ndarray, list)) else v for name, v in args.items()})

    def to_node(self) -> Dict[str, Node]:
        return {"attribute": self.attribute, "args": self.args}


def _raise_remote(error: Any, status: int) -> None:
    if not isinstance(error, dict):
        raise RemoteError(f"server answered {status} without an error description", status=status)
    kind = error.get("kind")
    message = str(error.get("message", ""))
    if kind in _STREAM_KINDS:
        raise _STREAM_KINDS[kind](f"server: {message}")
    cls = _REMOTE_KINDS.get(kind)
    if cls is ValidationRejected:
        findings = [Finding(Severity(f["severity"]), f["path"], f["message"]) for f in error.get("findings", [])]
        raise ValidationRejected(message, findings=findings, status=status)
    if cls is not None:
        raise cls(message, status=status)
    raise RemoteError(message, kind=kind, status=status)


class StreamClient:
    """
    Client of one streaming server. Not thread-safe: use one client per thread.
    Every request and response body is sealed with cfg's key; a response that fails authentication raises
    AuthenticationFailure before anything in it is parsed.
    """

    def __init__(self, url: str, cfg: StreamConfig, timeout: float = DEFAULT_TIMEOUT) -> None:
        self._url = url.rstrip("/")
        self._cfg = cfg
        self._timeout = timeout
        self._session = requests.Session()

    @property
    def url(self) -> str:
        return self._url

    def _exchange(self, method: str, endpoint: str, node: Optional[Node] = None) -> Node:
        data = None
        if node is not None:
            data = json.dumps(seal_payload(canonical_bytes(node), self._cfg).to_dict())
        try:
            response = self._session.request(
                method, f"{self._url}{endpoint}", data=data, headers={"Content-Type": "application/json"}, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise TransportFailure(f"{method} {endpoint}: {exc}") from exc
        try:
            envelope = SealedEnvelope.from_dict(parse(response.content))
        except FormatError as exc:
            raise TransportFailure(f"{method} {endpoint}: unsealed response with status {response.status_code}") from exc
        body = parse(open_payload(envelope, self._cfg))
        if response.status_code != 200:
            _raise_remote(body.get("error") if isinstance(body, dict) else None, response.status_code)
        return body

    def health(self) -> str:
        try:
            response = self._session.get(f"{self._url}/health", timeout=self._timeout)
            response.raise_for_status()
        except requests.RequestException as exc:
            raise TransportFailure(f"GET /health: {exc}") from exc
        return response.text

    def predict(self, X: Any) -> np.ndarray:
        body = self._exchange("POST", "/predict", {"X": encode_tensor(np.asarray(X, dtype=np.float64))})
        return decode_tensor(body["y"], "y")

    def remote_call(self, call: RemoteCall) -> Node:
        return self._exchange("POST", "/call", call.to_node())

    def call(self, attribute: str, **args: Any) -> Any:
        """Returns the decoded tensor for predict-like calls, or the acknowledgement map for fit."""
        body = self.remote_call(RemoteCall.build(attribute, **args))
        if "result" in body:
            return decode_tensor(body["result"], "result")
        return body["ack"]

    def upload(self, doc: ModelDocument) -> Dict[str, Node]:
        return self._exchange("POST", "/upload", doc.to_node())["ack"]

    def download(self) -> ModelDocument:
        return ModelDocument.from_node(self._exchange("GET", "/download"))

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "StreamClient":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


def client_predict(client: StreamClient, X: Any) -> np.ndarray:
    return client.predict(X)


def remote_call(client: StreamClient, call: RemoteCall) -> Node:
    return client.remote_call(call)


def client_upload(client: StreamClient, doc: ModelDocument) -> Dict[str, Node]:
    return client.upload(doc)


def client_download(client: StreamClient) -> ModelDocument:
    return client.download()
