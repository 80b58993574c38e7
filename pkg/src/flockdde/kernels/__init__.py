"""Hot-loop backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback takes over transparently. Set FLOCKDDE_PURE_PYTHON=1 to force the
fallback (parity tests and benchmarks use this).
"""

from __future__ import annotations

import importlib
import os

from . import _numpy

if os.environ.get("FLOCKDDE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _numpy
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _numpy
        BACKEND = "python"

OK = _numpy.OK
DEGENERATE = _numpy.DEGENERATE

weights = _impl.weights
accelerations = _impl.accelerations
pairwise_diameter = _impl.pairwise_diameter
integrate_arrays = _impl.integrate_arrays


def load_backend(name: str):
    """Return a specific backend module ('python' or 'compiled'), or None if
    it is not available. Benchmarks and parity tests compare the two."""
    if name == "python":
        return _numpy
    if name == "compiled":
        try:
            return importlib.import_module("flockdde.kernels._speedups")
        except ImportError:
            return None
    raise ValueError(f"unknown backend {name!r}")
