"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise
the numpy fallback is used. IGPSIM_BACKEND=python or =compiled forces
the choice (forcing "compiled" raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import pycore

_requested = os.environ.get("IGPSIM_BACKEND", "auto").strip().lower()

_compiled = None
if _requested in ("auto", "", "compiled"):
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None

if _requested == "python":
    _impl = pycore
elif _requested == "compiled":
    if _compiled is None:
        raise ImportError(
            "IGPSIM_BACKEND=compiled but the igpsim._kernels._core extension "
            "is not importable; rebuild the package or unset the variable"
        )
    _impl = _compiled
elif _requested in ("auto", ""):
    _impl = _compiled if _compiled is not None else pycore
else:
    raise ImportError(f"unknown IGPSIM_BACKEND value {_requested!r}")

BACKEND = _impl.BACKEND_NAME
csr_matvec = _impl.csr_matvec
cg_jacobi = _impl.cg_jacobi
taxis_rhs = _impl.taxis_rhs


def available_backends() -> dict:
    """Importable backend modules keyed by name (for parity tests, benchmarks)."""
    out = {"python": pycore}
    mod = _compiled
    if mod is None:
        try:
            from . import _core as mod
        except ImportError:
            mod = None
    if mod is not None:
        out["compiled"] = mod
    return out
