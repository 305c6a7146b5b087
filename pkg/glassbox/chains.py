from typing import Any, Dict, Iterable, Tuple, Type, Union

from streamerate import slist, stream
from strenum import StrEnum
from typing_extensions import Self

from glassbox.errors import FormatError, UnknownCategory, UnsupportedStructure
from glassbox.itransporter import ITransporter
from glassbox.tensors import Node
from glassbox.transporters import (
    ContainerTransporter,
    LabelIndexTransporter,
    NdArrayTransporter,
    PrimitiveTransporter,
    ScalarTransporter,
    TreeTransporter,
)


class ModelCategory(StrEnum):
    LinearModel = "LinearModel"
    DecisionTree = "DecisionTree"
    Clustering = "Clustering"
    NaiveBayes = "NaiveBayes"

    @classmethod
    def parse(cls, tag: Union[str, "ModelCategory"]) -> "ModelCategory":
        try:
            return cls(tag)
        except ValueError:
            raise UnknownCategory(f"unknown model category {tag!r}") from None


# narrow transporters first, the recursive container transporter last
CHAIN_LAYOUTS: Dict[ModelCategory, Tuple[Type[ITransporter], ...]] = {
    ModelCategory.LinearModel: (PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, ContainerTransporter),
    ModelCategory.DecisionTree: (PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, TreeTransporter, LabelIndexTransporter, ContainerTransporter),
    ModelCategory.Clustering: (PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, ContainerTransporter),
    ModelCategory.NaiveBayes: (PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, LabelIndexTransporter, ContainerTransporter),
}


def _kind_of(value: Any) -> str:
    kind = type(value)
    return kind.__qualname__ if kind.__module__ == "builtins" else f"{kind.__module__}.{kind.__qualname__}"


class TransporterChain:
    """
    An ordered, fixed list of transporters consulted first-match-wins.
    A value (or node) that no member claims raises UnsupportedStructure; nothing is ever dropped silently.
    """

    def __init__(self, category: ModelCategory, transporters: Iterable[ITransporter]) -> None:
        self._category = category
        self._transporters = slist(transporters)

    @property
    def category(self) -> ModelCategory:
        return self._category

    @property
    def transporters(self) -> slist[ITransporter]:
        return slist(self._transporters)

    def claimants(self, value: Any) -> slist[ITransporter]:
        """All members whose can_handle fires for value, in chain order."""
        return stream(self._transporters).filter(lambda t: t.can_handle(value)).to_list()

    def serialize_value(self, value: Any, path: str = "") -> Node:
        for transporter in self._transporters:
            if transporter.can_handle(value):
                return transporter.serialize(value, self, path)
        raise UnsupportedStructure(path, _kind_of(value))

    def deserialize_value(self, node: Node, path: str = "") -> Any:
        for transporter in self._transporters:
            if transporter.can_restore(node):
                return transporter.deserialize(node, self, path)
        raise UnsupportedStructure(path, _kind_of(node))

    def with_transporter(self, transporter: ITransporter) -> Self:
        """A new chain with transporter inserted just before the terminal member; this chain is left unchanged."""
        members = list(self._transporters)
        return type(self)(self._category, members[:-1] + [transporter] + members[-1:])

    def __len__(self) -> int:
        return len(self._transporters)

    def __repr__(self) -> str:
        names = ", ".join(t.NAME for t in self._transporters)
        return f"TransporterChain({self._category}: {names})"


def build_chain(category: Union[ModelCategory, str]) -> TransporterChain:
    category = ModelCategory.parse(category)
    return TransporterChain(category, (cls() for cls in CHAIN_LAYOUTS[category]))


def chain_serialize(chain: TransporterChain, state: Dict[str, Any]) -> Dict[str, Node]:
    if not isinstance(state, dict):
        raise UnsupportedStructure("", _kind_of(state), "model state must be a map of fields")
    return {name: chain.serialize_value(value, name) for name, value in state.items()}


def chain_deserialize(chain: TransporterChain, node: Node) -> Dict[str, Any]:
    if not isinstance(node, dict):
        raise FormatError(f"model data must be a map, got {type(node).__name__}")
    return {name: chain.deserialize_value(child, name) for name, child in node.items()}
