import math
from typing import Any, Dict

import numpy as np

from glassbox.errors import FormatError, InvariantViolation, UnsupportedStructure
from glassbox.itransporter import AbstractTransporter, ITransporter
from glassbox.structures import LabelIndex, TreeStructure
from glassbox.tensors import (
    NDARRAY_STRUCTURE,
    SCALAR_TYPE_KEY,
    SCALAR_VALUE_KEY,
    Node,
    decode_scalar,
    decode_tensor,
    encode_scalar,
    encode_tensor,
    is_tensor,
    is_typed_scalar,
)

_PRIMITIVE_TYPES = (type(None), bool, int, str)


class PrimitiveTransporter(ITransporter):
    """null / bool / int / string / finite plain float config values, written as they are."""

    NAME = "primitive"

    def can_handle(self, value: Any) -> bool:
        if type(value) is float:
            return math.isfinite(value)
        return type(value) in _PRIMITIVE_TYPES

    def can_restore(self, node: Node) -> bool:
        return type(node) in _PRIMITIVE_TYPES or type(node) is float

    def serialize(self, value: Any, chain, path: str = "") -> Node:
        return value

    def deserialize(self, node: Node, chain, path: str = "") -> Any:
        return node


class ScalarTransporter(ITransporter):
    """numpy scalars wrapped as {"value", "np-type"}."""

    NAME = "scalar"

    def can_handle(self, value: Any) -> bool:
        return is_typed_scalar(value)

    def can_restore(self, node: Node) -> bool:
        return isinstance(node, dict) and set(node) == {SCALAR_VALUE_KEY, SCALAR_TYPE_KEY}

    def serialize(self, value: Any, chain, path: str = "") -> Node:
        return encode_scalar(value)

    def deserialize(self, node: Node, chain, path: str = "") -> Any:
        return decode_scalar(node, path)


class NdArrayTransporter(AbstractTransporter):
    NAME = "ndarray"
    STRUCTURE = NDARRAY_STRUCTURE

    def can_handle(self, value: Any) -> bool:
        return is_tensor(value)

    def _serialize_fields(self, value: np.ndarray, chain, path: str) -> Dict[str, Node]:
        return encode_tensor(value)

    def _deserialize_fields(self, node: Dict[str, Node], chain, path: str) -> np.ndarray:
        return decode_tensor(node, path)


class TreeTransporter(AbstractTransporter):
    """Decision trees as five parallel node arrays."""

    NAME = "tree"
    STRUCTURE = "Tree"

    def can_handle(self, value: Any) -> bool:
        return isinstance(value, TreeStructure)

    def _serialize_fields(self, value: TreeStructure, chain, path: str) -> Dict[str, Node]:
        return {name: chain.serialize_value(getattr(value, name), self._child_path(path, name)) for name in TreeStructure.ARRAY_FIELDS}

    def _deserialize_fields(self, node: Dict[str, Node], chain, path: str) -> TreeStructure:
        arrays = {}
        for name in TreeStructure.ARRAY_FIELDS:
            child = self._child_path(path, name)
            arr = chain.deserialize_value(self._require(node, name, path), child)
            if not isinstance(arr, np.ndarray):
                raise FormatError(f"{child}: expected a tensor")
            arrays[name] = arr
        tree = TreeStructure(**arrays)
        tree.check()
        return tree


class LabelIndexTransporter(AbstractTransporter):
    """Class-label arrays written with their explicit label -> position map."""

    NAME = "label_index"
    STRUCTURE = "LabelIndex"
    CLASSES_KEY = "classes"
    INDEX_KEY = "index"

    def can_handle(self, value: Any) -> bool:
        return isinstance(value, LabelIndex)

    def _serialize_fields(self, value: LabelIndex, chain, path: str) -> Dict[str, Node]:
        return {
            self.CLASSES_KEY: chain.serialize_value(value.classes, self._child_path(path, self.CLASSES_KEY)),
            self.INDEX_KEY: {str(label): pos for label, pos in value.index.items()},
        }

    def _deserialize_fields(self, node: Dict[str, Node], chain, path: str) -> LabelIndex:
        classes = chain.deserialize_value(self._require(node, self.CLASSES_KEY, path), self._child_path(path, self.CLASSES_KEY))
        if not isinstance(classes, np.ndarray) or classes.dtype != np.int64:
            raise FormatError(f"{self._child_path(path, self.CLASSES_KEY)}: expected an int64 tensor")
        label_index = LabelIndex.from_classes(classes)
        index = self._require(node, self.INDEX_KEY, path)
        if index != {str(label): pos for label, pos in label_index.index.items()}:
            raise InvariantViolation(f"{self._child_path(path, self.INDEX_KEY)}: index map disagrees with class order")
        return label_index


class ContainerTransporter(ITransporter):
    """Lists and string-keyed maps, recursing through the chain. Terminal member of every chain."""

    NAME = "container"

    def can_handle(self, value: Any) -> bool:
        return type(value) in (list, dict)

    def can_restore(self, node: Node) -> bool:
        return type(node) in (list, dict)

    def serialize(self, value: Any, chain, path: str = "") -> Node:
        if isinstance(value, list):
            return [chain.serialize_value(item, f"{path}[{i}]") for i, item in enumerate(value)]
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise UnsupportedStructure(path, f"map key of type {type(key).__name__}")
            out[key] = chain.serialize_value(item, f"{path}.{key}" if path else key)
        return out

    def deserialize(self, node: Node, chain, path: str = "") -> Any:
        if isinstance(node, list):
            return [chain.deserialize_value(item, f"{path}[{i}]") for i, item in enumerate(node)]
        return {key: chain.deserialize_value(item, f"{path}.{key}" if path else key) for key, item in node.items()}
