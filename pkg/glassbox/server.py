import hashlib
import json
import logging
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import uvicorn
from fastapi import FastAPI, Request, Response
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import PlainTextResponse
from tsx import iTSms

from glassbox.envelope import PROTOCOL_VERSION, SealedEnvelope, StreamConfig, open_payload, record_size_bound, seal_payload
from glassbox.errors import (
    BindFailure,
    GlassboxError,
    InvalidArgs,
    ModelLoadFailure,
    PayloadTooLarge,
    NoHostedModel,
    RemoteError,
    StreamError,
    UnknownAttribute,
    ValidationRejected,
)
from glassbox.imodel import Dataset, IModel
from glassbox.tensors import Node, canonical_bytes, decode_tensor, encode_tensor, parse
from glassbox.transport import ModelDocument, export_model, import_model, load_document
from glassbox.validation import validate_document

logger = logging.getLogger(__name__)

STARTUP_TIMEOUT = 10.0
SHUTDOWN_TIMEOUT = 10.0

TENSOR_RESULT_CALLS = frozenset({"predict", "decision_function"})


@dataclass(frozen=True)
class HostedModel:
    """An immutable snapshot of what the server hosts; swapped as a whole, never mutated."""

    model: IModel
    document: ModelDocument
    digest: str
    hosted_at_ms: int

    @classmethod
    def build(cls, model: IModel, document: ModelDocument) -> "HostedModel":
        return cls(model=model, document=document, digest=hashlib.sha256(document.canonical_bytes()).hexdigest(), hosted_at_ms=int(iTSms.now()))

    def metadata(self) -> Dict[str, Node]:
        return {
            "model_type": self.document.model_type,
            "n_features_in_": self.model.n_features_in_,
            "sha256": self.digest,
            "hosted_at_ms": self.hosted_at_ms,
        }


class ModelHost:
    """
    Single-writer / multi-reader holder of the hosted model.
    Readers take one snapshot reference per request and never block. Writers (upload and refit) are serialized by one
    lock held from reading the current snapshot until the replacement is swapped in, so no update is lost.
    """

    def __init__(self, hosted: Optional[HostedModel] = None) -> None:
        self._hosted = hosted
        self._writer_lock = threading.Lock()

    @classmethod
    def build(cls, document_path: Optional[Path] = None) -> "ModelHost":
        """
        :raises ModelLoadFailure: if the document does not load, validate or import
        """
        if document_path is None:
            return cls()
        try:
            doc = load_document(document_path)
            report = validate_document(doc)
            if not report.ok:
                raise ModelLoadFailure(f"{document_path} failed validation:\n{report.to_text()}")
            return cls(HostedModel.build(import_model(doc), doc))
        except ModelLoadFailure:
            raise
        except GlassboxError as exc:
            raise ModelLoadFailure(f"cannot host {document_path}: {exc}") from exc

    def current(self) -> HostedModel:
        hosted = self._hosted
        if hosted is None:
            raise NoHostedModel("the server hosts no model")
        return hosted

    def _swap(self, hosted: HostedModel) -> HostedModel:
        # caller holds _writer_lock
        self._hosted = hosted
        logger.info("now hosting %s (sha256 %s)", hosted.document.model_type, hosted.digest[:12])
        return hosted

    def replace_document(self, node: Node) -> HostedModel:
        """
        :raises ValidationRejected: if the document fails validation
        """
        report = validate_document(node)
        if not report.ok:
            raise ValidationRejected("uploaded document failed validation", findings=report.errors)
        doc = ModelDocument.from_node(node)
        replacement = HostedModel.build(import_model(doc), doc)
        with self._writer_lock:
            return self._swap(replacement)

    def refit(self, ds: Dataset) -> HostedModel:
        """Fits a fresh copy of the hosted model on ds and hosts it; concurrent uploads wait until the swap is done."""
        with self._writer_lock:
            refitted = self.current().model.fit(ds)
            return self._swap(HostedModel.build(refitted, export_model(refitted)))


def _tensor_arg(args: Dict[str, Node], name: str, required: bool = True) -> Any:
    if name not in args:
        if required:
            raise InvalidArgs(f"missing argument {name!r}")
        return None
    try:
        return decode_tensor(args[name], name)
    except GlassboxError as exc:
        raise InvalidArgs(f"argument {name!r}: {exc}") from exc


def _error_body(exc: BaseException) -> Dict[str, Node]:
    if isinstance(exc, RemoteError):
        kind, message = exc.kind, exc.message
    elif isinstance(exc, StreamError):
        kind, message = exc.KIND, str(exc)
    else:
        kind, message = InvalidArgs.KIND, str(exc)
    error: Dict[str, Node] = {"kind": kind, "message": message}
    if isinstance(exc, ValidationRejected):
        error["findings"] = [{"severity": str(f.severity), "path": f.path, "message": f.message} for f in exc.findings]
    return {"error": error}


def _status_of(exc: BaseException) -> int:
    if isinstance(exc, RemoteError):
        return exc.status
    if isinstance(exc, StreamError):
        return exc.STATUS
    return InvalidArgs.STATUS


class StreamService:
    """
    Request handling for the streaming endpoints. Every body except /health is a sealed envelope, errors included.
    Handlers run on the worker thread pool so model math never blocks the event loop.
    """

    def __init__(self, host: ModelHost, cfg: StreamConfig) -> None:
        self._host = host
        self._cfg = cfg

    @property
    def host(self) -> ModelHost:
        return self._host

    def _seal(self, node: Node, status: int) -> Response:
        envelope = seal_payload(canonical_bytes(node), self._cfg)
        return Response(content=json.dumps(envelope.to_dict()), status_code=status, media_type="application/json")

    def reject(self, exc: GlassboxError) -> Response:
        status, body = _status_of(exc), _error_body(exc)
        logger.warning("rejected request: %s (%d)", body["error"]["kind"], status)
        return self._seal(body, status)

    def handle(self, raw: Optional[bytes], operation: Callable[[Optional[Node]], Node]) -> Response:
        try:
            request_node = None
            if raw is not None:
                request_node = parse(open_payload(SealedEnvelope.from_dict(parse(raw)), self._cfg))
            return self._seal(operation(request_node), 200)
        except GlassboxError as exc:
            return self.reject(exc)
        except Exception as exc:  # pylint: disable=broad-exception-caught
            logger.exception("unexpected error while serving a request")
            return self._seal({"error": {"kind": StreamError.KIND, "message": f"{type(exc).__name__}: {exc}"}}, StreamError.STATUS)

    @staticmethod
    def _as_map(node: Optional[Node], what: str) -> Dict[str, Node]:
        if not isinstance(node, dict):
            raise InvalidArgs(f"{what} body must be a map")
        return node

    def predict(self, node: Optional[Node]) -> Node:
        hosted = self._host.current()
        X = _tensor_arg(self._as_map(node, "predict"), "X")
        return {"y": encode_tensor(hosted.model.predict(X))}

    def call(self, node: Optional[Node]) -> Node:
        body = self._as_map(node, "call")
        attribute = body.get("attribute")
        args = body.get("args", {})
        if not isinstance(attribute, str):
            raise InvalidArgs("'attribute' must be a string")
        if not isinstance(args, dict):
            raise InvalidArgs("'args' must be a map")
        hosted = self._host.current()
        if attribute not in hosted.model.REMOTE_CALLS:
            raise UnknownAttribute(f"{hosted.document.model_type} does not expose {attribute!r}")

        if attribute in TENSOR_RESULT_CALLS:
            X = _tensor_arg(args, "X")
            return {"result": encode_tensor(getattr(hosted.model, attribute)(X))}
        ds = Dataset.build(_tensor_arg(args, "X"), _tensor_arg(args, "y", required=False))
        return {"ack": self._host.refit(ds).metadata()}

    def upload(self, node: Optional[Node]) -> Node:
        return {"ack": self._host.replace_document(node).metadata()}

    def download(self, _node: Optional[Node]) -> Node:
        return self._host.current().document.to_node()

    def app(self) -> FastAPI:
        app = FastAPI(title="glassbox model streaming", docs_url=None, redoc_url=None, openapi_url=None)

        limit = record_size_bound(self._cfg.max_payload_bytes)

        async def sealed(request: Request, operation: Callable[[Optional[Node]], Node]) -> Response:
            declared = request.headers.get("content-length", "")
            if declared.isdigit() and int(declared) > limit:
                return self.reject(PayloadTooLarge(f"request of {declared} bytes exceeds the {limit}-byte limit"))
            raw = bytearray()
            async for chunk in request.stream():
                raw.extend(chunk)
                if len(raw) > limit:
                    return self.reject(PayloadTooLarge(f"request body exceeds the {limit}-byte limit"))
            return await run_in_threadpool(self.handle, bytes(raw), operation)

        @app.get("/health", response_class=PlainTextResponse)
        async def health() -> str:
            return f"ok {PROTOCOL_VERSION}"

        @app.post("/predict")
        async def predict(request: Request) -> Response:
            return await sealed(request, self.predict)

        @app.post("/call")
        async def call(request: Request) -> Response:
            return await sealed(request, self.call)

        @app.post("/upload")
        async def upload(request: Request) -> Response:
            return await sealed(request, self.upload)

        @app.get("/download")
        async def download() -> Response:
            return await run_in_threadpool(self.handle, None, self.download)

        return app


class ServerHandle:
    """A running server on a background thread. Usable as a context manager that shuts the server down on exit."""

    def __init__(self, server: uvicorn.Server, thread: threading.Thread, sock: socket.socket, service: StreamService) -> None:
        self._server = server
        self._thread = thread
        self._sock = sock
        self._service = service
        self.host, self.port = sock.getsockname()[:2]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    @property
    def model_host(self) -> ModelHost:
        return self._service.host

    def wait(self) -> None:
        while self._thread.is_alive():
            self._thread.join(timeout=0.5)

    def shutdown(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=SHUTDOWN_TIMEOUT)
        self._sock.close()
        logger.info("server on %s stopped", self.url)

    def __enter__(self) -> "ServerHandle":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.shutdown()


def _bind(host: str, port: int) -> socket.socket:
    sock = socket.socket(socket.AF_INET6 if ":" in host else socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
        sock.listen(128)
    except OSError as exc:
        sock.close()
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
    return sock


def serve(cfg: StreamConfig) -> ServerHandle:
    """
    Starts the streaming server on a background thread and returns once it accepts connections.
    Port 0 binds an ephemeral port; the handle reports the actual one.

    :raises ModelLoadFailure: if cfg.document_path does not load, validate or import
    :raises BindFailure: if the address cannot be bound or the server does not start
    """
    service = StreamService(ModelHost.build(cfg.document_path), cfg)
    sock = _bind(cfg.host, cfg.port)
    config = uvicorn.Config(service.app(), log_level="warning", access_log=False, lifespan="off")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, kwargs={"sockets": [sock]}, name="glassbox-server", daemon=True)
    thread.start()

    deadline = time.monotonic() + STARTUP_TIMEOUT
    while not server.started:
        if not thread.is_alive() or time.monotonic() > deadline:
            server.should_exit = True
            sock.close()
            raise BindFailure(f"server on {cfg.host}:{cfg.port} did not start")
        time.sleep(0.01)

    handle = ServerHandle(server, thread, sock, service)
    logger.info("serving on %s", handle.url)
    return handle
