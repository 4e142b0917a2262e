"""Kernel backend selection.

The compiled :mod:`tempo._ckernels` is used when it was built; otherwise the
pure-Python :mod:`tempo._pykernels` is loaded.  Setting ``TEMPO_PURE_PYTHON=1``
forces the fallback (the benchmark and the backend-parity tests rely on it).
"""

import os

if os.environ.get("TEMPO_PURE_PYTHON", "") not in ("", "0"):
    from tempo import _pykernels as backend
else:
    try:
        from tempo import _ckernels as backend
    except ImportError:  # extension not built
        from tempo import _pykernels as backend

INF = backend.INF
LE_ZERO = backend.LE_ZERO
BACKEND = backend.BACKEND
