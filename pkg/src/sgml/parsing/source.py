"""Input file handling: kind detection, location-aware XML parsing, diagnostics.

File kind is decided from document content (root element name and, for SCL
documents, which sections are present), never from the file extension.
Namespaces are matched by local element name only; vendor files disagree on
URIs too often to reject on them.
"""

from __future__ import annotations

import enum
import io
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path


class FileKind(enum.Enum):
    SSD = "SSD"
    SCD = "SCD"
    ICD = "ICD"
    SED = "SED"
    PLC_LOGIC = "PLC_LOGIC"
    IED_CONFIG = "IED_CONFIG"
    SCADA_CONFIG = "SCADA_CONFIG"
    PS_EXTRA = "PS_EXTRA"


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: Severity
    file: str
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}: {self.severity.value}: {self.message}"


class ParseFailure(Exception):
    """Raised when a file cannot be turned into a model part."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics) or "parse failed")


@dataclass
class DiagnosticSink:
    """Collects diagnostics during one parse; errors are fatal at the end."""

    file: str
    items: list[ParseDiagnostic] = field(default_factory=list)

    def error(self, line: int, column: int, message: str) -> None:
        self.items.append(ParseDiagnostic(Severity.ERROR, self.file, line, column, message))

    def warning(self, line: int, column: int, message: str) -> None:
        self.items.append(ParseDiagnostic(Severity.WARNING, self.file, line, column, message))

    def error_at(self, doc: "XmlDocument", elem: ET.Element, message: str) -> None:
        line, col = doc.position(elem)
        self.error(line, col, message)

    def warning_at(self, doc: "XmlDocument", elem: ET.Element, message: str) -> None:
        line, col = doc.position(elem)
        self.warning(line, col, message)

    def has_errors(self) -> bool:
        return any(d.severity == Severity.ERROR for d in self.items)

    def raise_if_errors(self) -> None:
        if self.has_errors():
            raise ParseFailure(self.items)


def local_name(tag: str) -> str:
    """Strip any namespace qualifier ({uri}Name or prefix:Name) from a tag."""
    return tag.rsplit("}", 1)[-1].rsplit(":", 1)[-1]


class _ExpatTreeBuilder:
    """Build an ElementTree via expat, recording each element's line/column."""

    def __init__(self):
        import xml.parsers.expat as expat
        self.parser = expat.ParserCreate(namespace_separator=None)
        self.parser.buffer_text = True
        self.parser.StartElementHandler = self._start
        self.parser.EndElementHandler = self._end
        self.parser.CharacterDataHandler = self._data
        self.positions: dict[ET.Element, tuple[int, int]] = {}
        self.root: ET.Element | None = None
        self._stack: list[ET.Element] = []
        self._text: list[str] = []
        self.namespace = ""

    def _flush_text(self) -> None:
        if not self._text or not self._stack:
            self._text = []
            return
        text = "".join(self._text)
        self._text = []
        elem = self._stack[-1]
        if len(elem):
            elem[-1].tail = (elem[-1].tail or "") + text
        else:
            elem.text = (elem.text or "") + text

    def _start(self, tag: str, attrs: dict) -> None:
        self._flush_text()
        if not self._stack and "xmlns" in attrs:
            self.namespace = attrs["xmlns"]
        clean = {k: v for k, v in attrs.items()
                 if k != "xmlns" and not k.startswith("xmlns:")}
        elem = ET.Element(tag, clean)
        self.positions[elem] = (self.parser.CurrentLineNumber,
                                self.parser.CurrentColumnNumber + 1)
        if self._stack:
            self._stack[-1].append(elem)
        else:
            self.root = elem
        self._stack.append(elem)

    def _end(self, tag: str) -> None:
        self._flush_text()
        self._stack.pop()

    def _data(self, data: str) -> None:
        self._text.append(data)


@dataclass
class XmlDocument:
    """Parsed XML with element positions and the declared default namespace."""

    path: str
    root: ET.Element
    positions: dict[ET.Element, tuple[int, int]]
    namespace: str = ""

    def position(self, elem: ET.Element) -> tuple[int, int]:
        return self.positions.get(elem, (1, 1))

    def children(self, elem: ET.Element, name: str) -> list[ET.Element]:
        return [c for c in elem if local_name(c.tag) == name]

    def find(self, elem: ET.Element, name: str) -> ET.Element | None:
        for c in elem:
            if local_name(c.tag) == name:
                return c
        return None

    def iter_named(self, name: str) -> list[ET.Element]:
        return [e for e in self.root.iter() if local_name(e.tag) == name]


def parse_xml(data: bytes, path: str) -> XmlDocument:
    """Parse bytes into an XmlDocument; malformed XML raises ParseFailure."""
    import xml.parsers.expat as expat

    builder = _ExpatTreeBuilder()
    try:
        builder.parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise ParseFailure([ParseDiagnostic(
            Severity.ERROR, path, exc.lineno, max(exc.offset + 1, 1),
            f"malformed XML: {expat.errors.messages[exc.code]}")])
    if builder.root is None:
        raise ParseFailure([ParseDiagnostic(Severity.ERROR, path, 1, 1, "empty document")])
    return XmlDocument(path=path, root=builder.root,
                       positions=builder.positions, namespace=builder.namespace)


_ST_HINT = re.compile(r"\b(PROGRAM|VAR|END_VAR|IF|THEN)\b")


@dataclass(frozen=True)
class SourceFile:
    path: str
    kind: FileKind
    data: bytes

    @property
    def text(self) -> str:
        return self.data.decode("utf-8")


def detect_kind(data: bytes, path: str) -> FileKind:
    """Identify the file kind from document content.

    SCL documents share the ``SCL`` root, so the sections present decide:
    an exchange section makes it an SED, a Communication section an SCD,
    a Substation section an SSD, and a bare IED capability listing an ICD.
    Non-XML files that look like structured text are PLC logic.
    """
    stripped = data.lstrip()
    if not stripped.startswith(b"<"):
        if _ST_HINT.search(data.decode("utf-8", errors="replace")):
            return FileKind.PLC_LOGIC
        raise ParseFailure([ParseDiagnostic(Severity.ERROR, path, 1, 1,
                                            "not XML and not recognizable structured text")])
    doc = parse_xml(data, path)
    root = local_name(doc.root.tag)
    if root == "SCL":
        names = {local_name(e.tag) for e in doc.root}
        if "SubstationExchange" in names:
            return FileKind.SED
        if "Communication" in names:
            return FileKind.SCD
        if "Substation" in names or "Interconnection" in names:
            return FileKind.SSD
        if "IED" in names:
            return FileKind.ICD
        raise ParseFailure([ParseDiagnostic(Severity.ERROR, path, 1, 1,
                                            "SCL document has no recognizable section")])
    by_root = {
        "IEDConfig": FileKind.IED_CONFIG,
        "ScadaConfig": FileKind.SCADA_CONFIG,
        "PowerSystemExtra": FileKind.PS_EXTRA,
        "project": FileKind.PLC_LOGIC,
    }
    if root in by_root:
        return by_root[root]
    raise ParseFailure([ParseDiagnostic(Severity.ERROR, path, 1, 1,
                                        f"unrecognized root element {root!r}")])


def load_source(path: str | Path) -> SourceFile:
    data = Path(path).read_bytes()
    kind = detect_kind(data, str(path))
    return SourceFile(path=str(path), kind=kind, data=data)


def source_from_bytes(data: bytes, path: str = "<memory>") -> SourceFile:
    return SourceFile(path=path, kind=detect_kind(data, path), data=data)
