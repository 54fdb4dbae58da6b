"""Kernel backend selection.

The compiled Cython kernels are used when the extension built; otherwise
the pure-numpy fallback takes over. Set PRECIPMERGE_KERNELS=python (or
=c) to force a backend at import time. Both backends produce bit-identical
results; the compiled one is just faster (see benchmarks/).
"""

from __future__ import annotations

import os

from . import _python

_VALID = ("c", "python")


def _select(name: str):
    if name == "python":
        return _python
    from . import _splitkern

    return _splitkern


_forced = os.environ.get("PRECIPMERGE_KERNELS", "").strip().lower()
if _forced and _forced not in _VALID:
    raise ImportError(
        f"PRECIPMERGE_KERNELS={_forced!r} not understood; use one of {_VALID}"
    )

if _forced == "python":
    _impl = _python
    BACKEND = "python"
elif _forced == "c":
    _impl = _select("c")
    BACKEND = "c"
else:
    try:
        _impl = _select("c")
        BACKEND = "c"
    except ImportError:
        _impl = _python
        BACKEND = "python"


def set_backend(name: str) -> str:
    """Swap the active backend; returns the previous one.

    Intended for tests and benchmarks that compare the two backends in one
    process. Raises ImportError if the compiled kernels are unavailable.
    """
    global _impl, BACKEND
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}")
    previous = BACKEND
    _impl = _select(name)
    BACKEND = name
    return previous


def best_split_sse(*args):
    return _impl.best_split_sse(*args)


def best_split_grad(*args):
    return _impl.best_split_grad(*args)


def partition_segments(*args):
    return _impl.partition_segments(*args)


def predict_tree(*args):
    return _impl.predict_tree(*args)
