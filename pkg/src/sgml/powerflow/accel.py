"""Backend selection for the solver hot kernels.

The compiled extension is used when present; otherwise the numpy fallback.
Set SGML_POWERFLOW_BACKEND=python to force the fallback (the benchmark
uses this to compare both paths).
"""

from __future__ import annotations

import os

if os.environ.get("SGML_POWERFLOW_BACKEND", "").lower() == "python":
    from sgml.powerflow import _accel_py as _impl
    BACKEND = "python"
else:
    try:
        from sgml.powerflow import _accel as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        from sgml.powerflow import _accel_py as _impl  # type: ignore[no-redef]
        BACKEND = "python"

calc_injections = _impl.calc_injections
build_jacobian = _impl.build_jacobian
