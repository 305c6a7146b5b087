from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, Dict, Optional

from glassbox.errors import FormatError, MissingKey
from glassbox.tensors import DATA_STRUCTURE_KEY, Node

if TYPE_CHECKING:
    from glassbox.chains import TransporterChain


class ITransporter(ABC):
    """
    A handler in a transporter chain.
    - it claims in-memory values through `can_handle` and document nodes through `can_restore`
    - `serialize` is only called on values it claims, `deserialize` only on nodes it claims
    - it is stateless; nested values are converted by calling back into the chain, never by another transporter directly
    """

    NAME: str = ""

    @abstractmethod
    def can_handle(self, value: Any) -> bool:
        raise NotImplementedError()

    @abstractmethod
    def can_restore(self, node: Node) -> bool:
        raise NotImplementedError()

    @abstractmethod
    def serialize(self, value: Any, chain: "TransporterChain", path: str = "") -> Node:
        raise NotImplementedError()

    @abstractmethod
    def deserialize(self, node: Node, chain: "TransporterChain", path: str = "") -> Any:
        raise NotImplementedError()

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class AbstractTransporter(ITransporter, ABC):
    """
    Partial implementation for transporters whose document form is a map tagged with a data-structure name.
    Subclasses set STRUCTURE and implement `_serialize_fields` / `_deserialize_fields`.
    """

    STRUCTURE: Optional[str] = None

    def can_restore(self, node: Node) -> bool:
        return isinstance(node, dict) and self.STRUCTURE is not None and node.get(DATA_STRUCTURE_KEY) == self.STRUCTURE

    def serialize(self, value: Any, chain: "TransporterChain", path: str = "") -> Node:
        fields = self._serialize_fields(value, chain, path)
        fields[DATA_STRUCTURE_KEY] = self.STRUCTURE
        return fields

    def deserialize(self, node: Node, chain: "TransporterChain", path: str = "") -> Any:
        if not self.can_restore(node):
            raise FormatError(f"{path or '<root>'}: {self.NAME} cannot restore this node")
        return self._deserialize_fields(node, chain, path)

    @staticmethod
    def _require(node: Dict[str, Node], key: str, path: str) -> Node:
        if key not in node:
            raise MissingKey(key, path)
        return node[key]

    @staticmethod
    def _child_path(path: str, key: str) -> str:
        return f"{path}.{key}" if path else key

    @abstractmethod
    def _serialize_fields(self, value: Any, chain: "TransporterChain", path: str) -> Dict[str, Node]:
        raise NotImplementedError()

    @abstractmethod
    def _deserialize_fields(self, node: Dict[str, Node], chain: "TransporterChain", path: str) -> Any:
        raise NotImplementedError()
