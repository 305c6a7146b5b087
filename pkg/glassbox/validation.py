from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Union

from streamerate import slist, stream
from strenum import StrEnum

from glassbox.chains import build_chain
from glassbox.errors import GlassboxError, MissingField
from glassbox.registry import MODEL_TYPES
from glassbox.tensors import Node, iter_non_data
from glassbox.transport import DATA_KEY, ENVELOPE_KEYS, FORMAT_VERSION, FORMAT_VERSION_KEY, MODEL_TYPE_KEY, ModelDocument

# Map keys that object-reconstruction formats interpret as "build this object" or "call this".
DIRECTIVE_KEYS = frozenset(
    {
        "__reduce__",
        "__reduce_ex__",
        "__class__",
        "__import__",
        "__builtins__",
        "$type",
    }
)
DIRECTIVE_PREFIXES = ("py/", "!!python/")


class Severity(StrEnum):
    error = "error"
    warning = "warning"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.path or '<root>'}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    findings: slist[Finding]

    @classmethod
    def build(cls, findings: List[Finding]) -> "ValidationReport":
        findings = slist(findings)
        return cls(ok=not any(f.severity is Severity.error for f in findings), findings=findings)

    @property
    def errors(self) -> slist[Finding]:
        return stream(self.findings).filter(lambda f: f.severity is Severity.error).to_list()

    @property
    def warnings(self) -> slist[Finding]:
        return stream(self.findings).filter(lambda f: f.severity is Severity.warning).to_list()

    def to_text(self) -> str:
        head = "valid" if self.ok else "INVALID"
        summary = f"{head}: {len(self.errors)} error(s), {len(self.warnings)} warning(s)"
        return "\n".join([summary] + [f"  {finding}" for finding in self.findings])


def _is_directive(key: str) -> bool:
    return key in DIRECTIVE_KEYS or key.startswith(DIRECTIVE_PREFIXES)


def _iter_directives(node: Any, path: str = "") -> Iterator[str]:
    if isinstance(node, list):
        for i, item in enumerate(node):
            yield from _iter_directives(item, f"{path}[{i}]")
    elif isinstance(node, dict):
        for key, item in node.items():
            child = f"{path}.{key}" if path else str(key)
            if isinstance(key, str) and _is_directive(key):
                yield child
            yield from _iter_directives(item, child)


def _check_data_only(node: Node) -> List[Finding]:
    findings = [Finding(Severity.error, path, f"not a data node: {desc}") for path, desc in iter_non_data(node)]
    findings += [Finding(Severity.error, path, "object-reconstruction directive key") for path in _iter_directives(node)]
    return findings


def _check_envelope(node: Node) -> List[Finding]:
    if not isinstance(node, dict):
        return [Finding(Severity.error, "", "document must be a map")]
    findings = [Finding(Severity.error, key, "missing envelope key") for key in ENVELOPE_KEYS if key not in node]
    for key in ENVELOPE_KEYS[1:]:
        if key in node and not isinstance(node[key], str):
            findings.append(Finding(Severity.error, key, f"must be a string, got {node[key]!r}"))
    if DATA_KEY in node and not isinstance(node[DATA_KEY], dict):
        findings.append(Finding(Severity.error, DATA_KEY, "must be a map"))
    if isinstance(node.get(FORMAT_VERSION_KEY), str) and node[FORMAT_VERSION_KEY] != FORMAT_VERSION:
        findings.append(Finding(Severity.warning, FORMAT_VERSION_KEY, f"format version {node[FORMAT_VERSION_KEY]} differs from {FORMAT_VERSION}"))
    for key in node:
        if key not in ENVELOPE_KEYS:
            findings.append(Finding(Severity.warning, str(key), "unknown envelope key"))
    return findings


def _check_model(model_type: str, data: Dict[str, Node]) -> List[Finding]:
    cls = MODEL_TYPES[model_type]
    chain = build_chain(cls.CATEGORY)
    findings = []
    state = {}
    for name, child in data.items():
        path = f"{DATA_KEY}.{name}"
        if name not in cls.STATE_FIELDS:
            findings.append(Finding(Severity.warning, path, f"field is not used by {model_type}"))
            continue
        try:
            state[name] = chain.deserialize_value(child, path)
        except (GlassboxError, ValueError, TypeError) as exc:
            findings.append(Finding(Severity.error, path, str(exc)))
    for name in cls.STATE_FIELDS:
        if name not in data:
            findings.append(Finding(Severity.error, f"{DATA_KEY}.{name}", "required field is missing"))
    if any(f.severity is Severity.error for f in findings):
        return findings

    try:
        cls.restore_state(state)
    except MissingField as exc:
        findings.append(Finding(Severity.error, f"{DATA_KEY}.{exc.field}", "required field is missing"))
    except (GlassboxError, ValueError, TypeError) as exc:
        findings.append(Finding(Severity.error, DATA_KEY, str(exc)))
    return findings


def validate_document(doc: Union[ModelDocument, Node]) -> ValidationReport:
    """
    Never raises: every problem becomes a finding. Unknown extra fields are warnings so newer files stay readable.
    Checks run in stages and stop at the first stage reporting an error, since later stages need the earlier guarantees.
    """
    node = doc.to_node() if isinstance(doc, ModelDocument) else doc

    findings = _check_data_only(node)
    if findings:
        return ValidationReport.build(findings)
    findings = _check_envelope(node)
    if any(f.severity is Severity.error for f in findings):
        return ValidationReport.build(findings)
    model_type = node[MODEL_TYPE_KEY]
    if model_type not in MODEL_TYPES:
        findings.append(Finding(Severity.error, MODEL_TYPE_KEY, f"unregistered model type {model_type!r}"))
        return ValidationReport.build(findings)
    return ValidationReport.build(findings + _check_model(model_type, node[DATA_KEY]))
