"""Behavioral emulation of IEDs, PLCs and the SCADA gateway."""

from sgml.devices.ied import GOOSE_HEARTBEAT_TICKS, PDIF_MAX_SAMPLE_AGE, IedRuntime
from sgml.devices.plc import PlcRuntime, ScanAbort, eval_expr, exec_statements
from sgml.devices.scada import ScadaGateway, point_table_document

__all__ = [
    "GOOSE_HEARTBEAT_TICKS", "IedRuntime", "PDIF_MAX_SAMPLE_AGE", "PlcRuntime",
    "ScadaGateway", "ScanAbort", "eval_expr", "exec_statements",
    "point_table_document",
]
