"""Hot numeric kernels with a compiled core and a pure numpy fallback.

The compiled backend (``_fast``, Cython) is used when its extension module
imported successfully; otherwise the pure backend (``_pure``) takes over.
The two are written to be bit-identical, so which one runs never changes a
result, only how long it takes.

Selection can be forced with the ``PHOTOCENSUS_BACKEND`` environment
variable (``fast`` or ``pure``) checked at import time, or temporarily with
the :func:`use_backend` context manager (used by the parity tests and the
benchmark).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pure

try:
    from . import _fast
except ImportError:  # pragma: no cover - depends on build environment
    _fast = None

IMPURITY_VARIANCE = _pure.IMPURITY_VARIANCE
IMPURITY_GINI = _pure.IMPURITY_GINI
NO_SPLIT = _pure.NO_SPLIT

_BACKENDS = {"pure": _pure}
if _fast is not None:
    _BACKENDS["fast"] = _fast


def _initial_backend() -> str:
    requested = os.environ.get("PHOTOCENSUS_BACKEND")
    if requested is None:
        return "fast" if _fast is not None else "pure"
    if requested not in ("fast", "pure"):
        raise ValueError(
            f"PHOTOCENSUS_BACKEND must be 'fast' or 'pure', got {requested!r}"
        )
    if requested == "fast" and _fast is None:
        raise ImportError(
            "PHOTOCENSUS_BACKEND=fast but the compiled extension is not available"
        )
    return requested


_active = _initial_backend()


def active_backend() -> str:
    """Name of the backend currently answering kernel calls."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


@contextmanager
def use_backend(name: str):
    """Run a block under a specific backend, restoring the previous one after."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    previous = _active
    _active = name
    try:
        yield
    finally:
        _active = previous


def best_split_kernel(X, y, columns, impurity, min_leaf=1):
    return _BACKENDS[_active].best_split_kernel(X, y, columns, impurity, min_leaf)


def tree_predict(feature, threshold, left, right, value, X):
    return _BACKENDS[_active].tree_predict(feature, threshold, left, right, value, X)
