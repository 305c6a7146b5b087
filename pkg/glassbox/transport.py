import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Union

import filelock

from glassbox.chains import build_chain, chain_deserialize, chain_serialize
from glassbox.errors import IoFailure, MalformedEnvelope, MissingEnvelopeKey, UnknownModelType, VersionMismatch
from glassbox.file_lock import DEFAULT_LOCK_TIMEOUT, ModelFileLock
from glassbox.imodel import IModel
from glassbox.registry import MODEL_TYPES, model_class
from glassbox.tensors import Node, canonical_bytes, parse, render_pretty

logger = logging.getLogger(__name__)

LIBRARY_VERSION = "0.1.0"
FORMAT_VERSION = "1.1"

DATA_KEY = "data"
LIBRARY_VERSION_KEY = "sklearn_version"
FORMAT_VERSION_KEY = "pymilo_version"
MODEL_TYPE_KEY = "model_type"
ENVELOPE_KEYS = (DATA_KEY, LIBRARY_VERSION_KEY, FORMAT_VERSION_KEY, MODEL_TYPE_KEY)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ModelDocument:
    """
    The versioned envelope that constitutes a model file.
    `sklearn_version` keeps its interop key name but carries this library's modeling-layer version.
    """

    data: Dict[str, Node]
    sklearn_version: str
    pymilo_version: str
    model_type: str

    def to_node(self) -> Dict[str, Node]:
        return {
            DATA_KEY: self.data,
            LIBRARY_VERSION_KEY: self.sklearn_version,
            FORMAT_VERSION_KEY: self.pymilo_version,
            MODEL_TYPE_KEY: self.model_type,
        }

    @classmethod
    def from_node(cls, node: Node) -> "ModelDocument":
        """
        :raises MalformedEnvelope: if node is not a map or an envelope value has the wrong type
        :raises MissingEnvelopeKey: if one of the four envelope keys is absent
        """
        if not isinstance(node, dict):
            raise MalformedEnvelope(f"model document must be a map, got {type(node).__name__}")
        missing = [key for key in ENVELOPE_KEYS if key not in node]
        if missing:
            raise MissingEnvelopeKey(f"model document lacks envelope key(s) {missing}")
        if not isinstance(node[DATA_KEY], dict):
            raise MalformedEnvelope(f"'{DATA_KEY}' must be a map")
        for key in (LIBRARY_VERSION_KEY, FORMAT_VERSION_KEY, MODEL_TYPE_KEY):
            if not isinstance(node[key], str):
                raise MalformedEnvelope(f"'{key}' must be a string, got {node[key]!r}")
        return cls(data=node[DATA_KEY], sklearn_version=node[LIBRARY_VERSION_KEY], pymilo_version=node[FORMAT_VERSION_KEY], model_type=node[MODEL_TYPE_KEY])

    def canonical_bytes(self) -> bytes:
        return canonical_bytes(self.to_node())

    def to_json(self) -> str:
        return render_pretty(self.to_node()) + "\n"


def export_model(model: IModel) -> ModelDocument:
    """
    :raises NotFitted: if model was never fitted
    :raises UnsupportedStructure: if the state holds a value no transporter of the model's chain claims
    """
    cls = model_class(model.MODEL_TYPE)
    state = model.extract_state()
    data = chain_serialize(build_chain(cls.CATEGORY), state)
    return ModelDocument(data=data, sklearn_version=LIBRARY_VERSION, pymilo_version=FORMAT_VERSION, model_type=cls.MODEL_TYPE)


def import_model(doc: ModelDocument, strict: bool = False) -> IModel:
    """
    A format-version mismatch is logged as a warning, or raises VersionMismatch when strict.
    A different modeling-layer version is only ever a warning.

    :raises UnknownModelType: if doc.model_type is not registered
    :raises MissingField, InvariantViolation: if the decoded state cannot run
    """
    if doc.model_type not in MODEL_TYPES:
        raise UnknownModelType(f"unknown model type {doc.model_type!r}; known: {sorted(MODEL_TYPES)}")
    if doc.pymilo_version != FORMAT_VERSION:
        if strict:
            raise VersionMismatch(f"document format version {doc.pymilo_version!r} differs from {FORMAT_VERSION!r}")
        logger.warning("importing format version %s with reader version %s", doc.pymilo_version, FORMAT_VERSION)
    if doc.sklearn_version != LIBRARY_VERSION:
        logger.warning("document was exported by modeling layer %s, this is %s", doc.sklearn_version, LIBRARY_VERSION)

    cls = model_class(doc.model_type)
    # unknown fields are skipped, never decoded
    unknown = [name for name in doc.data if name not in cls.STATE_FIELDS]
    if unknown:
        logger.warning("ignoring fields not used by %s: %s", doc.model_type, ", ".join(unknown))
    known = {name: value for name, value in doc.data.items() if name in cls.STATE_FIELDS}
    state = chain_deserialize(build_chain(cls.CATEGORY), known)
    return cls.restore_state(state)


def document_from_text(text: Union[str, bytes]) -> ModelDocument:
    return ModelDocument.from_node(parse(text))


def write_text_atomic(path: PathLike, text: str, lock_timeout: float = DEFAULT_LOCK_TIMEOUT) -> None:
    """
    Concurrent writers of one path never interleave and readers never see a partial file.

    :raises IoFailure: on any filesystem error or lock timeout
    """
    try:
        with ModelFileLock(path, timeout=lock_timeout) as lock:
            lock.replace_text(text)
    except filelock.Timeout as exc:
        raise IoFailure(f"timed out locking {path}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_document(doc: ModelDocument, path: PathLike, lock_timeout: float = DEFAULT_LOCK_TIMEOUT) -> None:
    """Pretty-printed UTF-8 JSON in envelope key order, written atomically."""
    write_text_atomic(path, doc.to_json(), lock_timeout)
    logger.debug("saved %s document to %s", doc.model_type, path)


def load_document(path: PathLike) -> ModelDocument:
    """
    :raises IoFailure: if the file cannot be read
    :raises ParseFailure: if the file is not valid JSON (NaN/Infinity literals included)
    :raises MissingEnvelopeKey: if an envelope key is absent
    """
    return document_from_text(read_bytes(path))


def read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


class Export:
    """Convenience wrapper: ``Export(model).save("model.json")``."""

    def __init__(self, model: IModel) -> None:
        self._document = export_model(model)

    @property
    def document(self) -> ModelDocument:
        return self._document

    def to_json(self) -> str:
        return self._document.to_json()

    def save(self, path: PathLike) -> None:
        save_document(self._document, path)


class Import:
    """Convenience wrapper: ``Import("model.json").to_model()``."""

    def __init__(self, path: PathLike, strict: bool = False) -> None:
        self._document = load_document(path)
        self._strict = strict

    @classmethod
    def from_json(cls, text: Union[str, bytes], strict: bool = False) -> "Import":
        return cls.from_document(document_from_text(text), strict=strict)

    @classmethod
    def from_document(cls, doc: ModelDocument, strict: bool = False) -> "Import":
        obj = cls.__new__(cls)
        obj._document = doc
        obj._strict = strict
        return obj

    @property
    def document(self) -> ModelDocument:
        return self._document

    def to_model(self) -> IModel:
        return import_model(self._document, strict=self._strict)
