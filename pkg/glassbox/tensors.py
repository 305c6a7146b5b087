"""
Typed tensors and scalars, and their canonical encoding to and from the transparent JSON document tree.

A *node* is plain data only: ``None``, ``bool``, ``int``, finite ``float``, ``str``, ``list`` and ``dict`` with ``str`` keys.
Tensors are ``numpy.ndarray`` of one of the :class:`DType` kinds; typed scalars are the matching ``numpy`` scalar types.
"""
import json
import math
from typing import Any, Dict, Iterator, List, Tuple, Union

import numpy as np
from strenum import StrEnum

from glassbox.errors import DTypeUnknown, FormatError, MissingKey, ParseFailure, ShapeMismatch, UnknownTypeTag

# key layout of the exported-model file format
NDARRAY_LIST_KEY = "pymiloed-ndarray-list"
NDARRAY_DTYPE_KEY = "pymiloed-ndarray-dtype"
NDARRAY_SHAPE_KEY = "pymiloed-ndarray-shape"
DATA_STRUCTURE_KEY = "pymiloed-data-structure"
NDARRAY_STRUCTURE = "numpy.ndarray"
SCALAR_VALUE_KEY = "value"
SCALAR_TYPE_KEY = "np-type"

NAN_SENTINEL = "nan"
POS_INF_SENTINEL = "inf"
NEG_INF_SENTINEL = "-inf"
_SENTINELS = {NAN_SENTINEL: math.nan, POS_INF_SENTINEL: math.inf, NEG_INF_SENTINEL: -math.inf}

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1

_DTYPE_ALIASES = {"bool_": "bool"}

Node = Union[None, bool, int, float, str, List["Node"], Dict[str, "Node"]]


class DType(StrEnum):
    float64 = "float64"
    int64 = "int64"
    bool_ = "bool"

    @property
    def numpy(self) -> np.dtype:
        return np.dtype(self.value)

    @classmethod
    def of(cls, dtype: Any) -> "DType":
        """Maps a numpy dtype (or its name) to a DType, raising DTypeUnknown for anything outside the closed set."""
        name = str(np.dtype(dtype)) if not isinstance(dtype, str) else _DTYPE_ALIASES.get(dtype, dtype)
        try:
            return cls(name)
        except ValueError:
            raise DTypeUnknown(f"unsupported dtype {name!r}, expected one of {[d.value for d in cls]}") from None


SCALAR_TYPE_TAGS: Dict[str, type] = {
    "numpy.float64": np.float64,
    "numpy.int64": np.int64,
    "numpy.bool_": np.bool_,
}
_SCALAR_TAG_BY_TYPE = {v: k for k, v in SCALAR_TYPE_TAGS.items()}


def is_tensor(value: Any) -> bool:
    return isinstance(value, np.ndarray) and value.dtype in (np.float64, np.int64, np.bool_)


def is_typed_scalar(value: Any) -> bool:
    return type(value) in _SCALAR_TAG_BY_TYPE


def _encode_float(x: float) -> Union[float, str]:
    if math.isnan(x):
        return NAN_SENTINEL
    if math.isinf(x):
        return POS_INF_SENTINEL if x > 0 else NEG_INF_SENTINEL
    return x


def _decode_element(item: Any, dtype: DType, where: str) -> Any:
    if dtype is DType.float64:
        if isinstance(item, str) and item in _SENTINELS:
            return _SENTINELS[item]
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            return float(item)
    elif dtype is DType.int64:
        if isinstance(item, int) and not isinstance(item, bool) and _INT64_MIN <= item <= _INT64_MAX:
            return item
    elif dtype is DType.bool_ and isinstance(item, bool):
        return item
    raise FormatError(f"{where}: element {item!r} is not representable as {dtype.value}")


def encode_tensor(t: np.ndarray) -> Dict[str, Node]:
    dtype = DType.of(t.dtype)
    flat = np.ascontiguousarray(t).ravel(order="C").tolist()
    if dtype is DType.float64:
        flat = [_encode_float(x) for x in flat]
    return {
        NDARRAY_LIST_KEY: flat,
        NDARRAY_DTYPE_KEY: dtype.value,
        NDARRAY_SHAPE_KEY: list(t.shape),
        DATA_STRUCTURE_KEY: NDARRAY_STRUCTURE,
    }


def decode_tensor(node: Node, path: str = "") -> np.ndarray:
    if not isinstance(node, dict):
        raise FormatError(f"{path or '<root>'}: tensor node must be a map, got {type(node).__name__}")
    for key in (NDARRAY_LIST_KEY, NDARRAY_DTYPE_KEY, NDARRAY_SHAPE_KEY, DATA_STRUCTURE_KEY):
        if key not in node:
            raise MissingKey(key, path)
    if node[DATA_STRUCTURE_KEY] != NDARRAY_STRUCTURE:
        raise FormatError(f"{path}: unexpected data structure {node[DATA_STRUCTURE_KEY]!r}")
    dtype_name = node[NDARRAY_DTYPE_KEY]
    if not isinstance(dtype_name, str):
        raise DTypeUnknown(f"{path}: dtype must be a string, got {dtype_name!r}")
    dtype = DType.of(dtype_name)

    shape = node[NDARRAY_SHAPE_KEY]
    if not isinstance(shape, list) or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 0 for d in shape):
        raise ShapeMismatch(f"{path}: shape must be a list of non-negative integers, got {shape!r}")
    data = node[NDARRAY_LIST_KEY]
    if not isinstance(data, list) or any(isinstance(item, (list, dict)) for item in data):
        raise ShapeMismatch(f"{path}: tensor list must be a flat list")
    expected = math.prod(shape)
    if len(data) != expected:
        raise ShapeMismatch(f"{path}: list holds {len(data)} elements but shape {shape} needs {expected}")

    values = [_decode_element(item, dtype, path) for item in data]
    return np.array(values, dtype=dtype.numpy).reshape(shape)


def encode_scalar(s: np.generic) -> Dict[str, Node]:
    tag = _SCALAR_TAG_BY_TYPE.get(type(s))
    if tag is None:
        raise UnknownTypeTag(f"unsupported scalar type {type(s).__name__}")
    value = s.item()
    if isinstance(value, float):
        value = _encode_float(value)
    return {SCALAR_VALUE_KEY: value, SCALAR_TYPE_KEY: tag}


def decode_scalar(node: Node, path: str = "") -> np.generic:
    if not isinstance(node, dict):
        raise FormatError(f"{path or '<root>'}: scalar node must be a map")
    for key in (SCALAR_VALUE_KEY, SCALAR_TYPE_KEY):
        if key not in node:
            raise MissingKey(key, path)
    tag = node[SCALAR_TYPE_KEY]
    scalar_type = SCALAR_TYPE_TAGS.get(tag) if isinstance(tag, str) else None
    if scalar_type is None:
        raise UnknownTypeTag(f"{path}: unknown np-type {tag!r}")
    dtype = DType.of(np.dtype(scalar_type))
    return scalar_type(_decode_element(node[SCALAR_VALUE_KEY], dtype, path))


def iter_non_data(node: Any, path: str = "") -> Iterator[Tuple[str, str]]:
    """Yields (path, description) for every node that is not one of the pure data variants."""
    if node is None or isinstance(node, (bool, str)):
        return
    if type(node) is int:
        return
    if type(node) is float:
        if not math.isfinite(node):
            yield path, f"non-finite float {node!r}"
        return
    if type(node) is list:
        for i, item in enumerate(node):
            yield from iter_non_data(item, f"{path}[{i}]")
        return
    if type(node) is dict:
        for key, item in node.items():
            if not isinstance(key, str):
                yield path, f"non-string map key {key!r}"
                continue
            yield from iter_non_data(item, f"{path}.{key}" if path else key)
        return
    yield path, f"non-data value of type {type(node).__module__}.{type(node).__qualname__}"


def is_data_node(node: Any) -> bool:
    return next(iter_non_data(node), None) is None


def canonical_bytes(node: Node) -> bytes:
    """Sorted keys, no insignificant whitespace, shortest round-trip float rendering, UTF-8."""
    return json.dumps(node, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False).encode("utf-8")


def render_pretty(node: Node) -> str:
    """Insertion-ordered, 2-space indented rendering used for files on disk."""
    return json.dumps(node, indent=2, ensure_ascii=False, allow_nan=False)


def _reject_constant(name: str) -> Any:
    raise ParseFailure(f"non-JSON literal {name} is not allowed")


def parse(text: Union[str, bytes, bytearray]) -> Node:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseFailure(str(exc)) from exc
