"""Parsing and serialization of all supported model file kinds."""

from sgml.parsing.scl import parse_icd, parse_scd, parse_sed, parse_ssd
from sgml.parsing.serialize import serialize
from sgml.parsing.source import (
    DiagnosticSink,
    FileKind,
    ParseDiagnostic,
    ParseFailure,
    Severity,
    SourceFile,
    detect_kind,
    load_source,
    source_from_bytes,
)
from sgml.parsing.stlogic import parse_plc_logic, parse_st_text
from sgml.parsing.supplementary import (
    IedConfigOverlay,
    IedOverlay,
    parse_ied_config,
    parse_ps_extra,
    parse_scada_config,
    resolve_name,
)

_SUPPLEMENTARY = {
    FileKind.IED_CONFIG: parse_ied_config,
    FileKind.SCADA_CONFIG: parse_scada_config,
    FileKind.PS_EXTRA: parse_ps_extra,
}


def parse_supplementary(file: SourceFile):
    """Dispatch an IED Config / SCADA Config / PS Extra file to its parser."""
    try:
        handler = _SUPPLEMENTARY[file.kind]
    except KeyError:
        raise ValueError(f"{file.path}: {file.kind.value} is not a supplementary kind")
    return handler(file)


def parse_any(file: SourceFile):
    """Parse a source file of any kind; returns (model part, diagnostics)."""
    if file.kind == FileKind.SSD:
        return parse_ssd(file)
    if file.kind == FileKind.SCD:
        return parse_scd(file)
    if file.kind == FileKind.ICD:
        return parse_icd(file)
    if file.kind == FileKind.SED:
        return parse_sed(file)
    if file.kind == FileKind.PLC_LOGIC:
        return parse_plc_logic(file)
    return parse_supplementary(file)


__all__ = [
    "DiagnosticSink", "FileKind", "IedConfigOverlay", "IedOverlay",
    "ParseDiagnostic", "ParseFailure", "Severity", "SourceFile",
    "detect_kind", "load_source", "parse_any", "parse_icd", "parse_ied_config",
    "parse_plc_logic", "parse_ps_extra", "parse_scada_config", "parse_scd",
    "parse_sed", "parse_ssd", "parse_st_text", "parse_supplementary",
    "resolve_name", "serialize", "source_from_bytes",
]
