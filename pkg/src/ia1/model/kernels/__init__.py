"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
backend is the fallback. IA1_KERNELS=reference|cython|auto forces the choice
(cython raises if the extension is missing, auto silently falls back).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import reference

_compiled: ModuleType | None
try:
    from . import _fastkern as _compiled
except ImportError:
    _compiled = None

_requested = os.environ.get("IA1_KERNELS", "auto").lower()
if _requested == "cython" and _compiled is None:
    raise ImportError("IA1_KERNELS=cython but the compiled kernel extension is not built")
if _requested not in ("auto", "cython", "reference"):
    raise ValueError(f"IA1_KERNELS must be auto, cython, or reference, got {_requested!r}")

_active = _compiled if (_compiled is not None and _requested != "reference") else reference

layer_norm_forward = _active.layer_norm_forward
layer_norm_backward = _active.layer_norm_backward
causal_softmax_forward = _active.causal_softmax_forward
causal_softmax_backward = _active.causal_softmax_backward
nll_rows = _active.nll_rows
cross_entropy_forward_backward = _active.cross_entropy_forward_backward
embedding_scatter_add = _active.embedding_scatter_add


def backend_name() -> str:
    return _active.BACKEND


def available_backends() -> tuple[str, ...]:
    return ("reference", "cython") if _compiled is not None else ("reference",)


def get_backend(name: str) -> ModuleType:
    """Fetch a specific backend module (for equivalence tests and benchmarks)."""
    if name == "reference":
        return reference
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel extension is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
