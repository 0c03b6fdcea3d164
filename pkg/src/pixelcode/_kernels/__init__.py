"""Backend selection for the batched current-solver kernel.

The compiled extension is preferred when present; otherwise the numpy
fallback is used. ``PIXELCODE_BACKEND=numpy`` forces the fallback (useful
for benchmarking and for reproducing results without a compiler).
"""

import os

from . import numpy_backend

if os.environ.get("PIXELCODE_BACKEND", "").lower() == "numpy":
    _impl = numpy_backend
    HAVE_NATIVE = False
else:
    try:
        from . import _native as _impl
        HAVE_NATIVE = True
    except ImportError:
        _impl = numpy_backend
        HAVE_NATIVE = False

batch_port_currents = _impl.batch_port_currents


def backend_name():
    return "native" if HAVE_NATIVE else "numpy"
