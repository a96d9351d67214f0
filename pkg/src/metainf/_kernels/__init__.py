"""Split-scan kernel backends.

The compiled Cython kernel is preferred when importable; the numpy fallback
is always available and produces bit-identical results. METAINF_KERNEL=python
or =cython forces a backend; tests and the benchmark can swap at runtime via
use_backend().
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _split_np

python_find_best_split = _split_np.find_best_split

try:
    from . import _split_cy  # type: ignore[attr-defined]

    cython_find_best_split = _split_cy.find_best_split
except ImportError:  # pragma: no cover - depends on the build
    cython_find_best_split = None

_forced = os.environ.get("METAINF_KERNEL", "").strip().lower()
if _forced == "python":
    BACKEND = "python"
elif _forced == "cython":
    if cython_find_best_split is None:
        raise ImportError("METAINF_KERNEL=cython but the compiled kernel is unavailable")
    BACKEND = "cython"
elif cython_find_best_split is not None:
    BACKEND = "cython"
else:
    BACKEND = "python"

find_best_split = cython_find_best_split if BACKEND == "cython" else python_find_best_split


def available_backends() -> dict[str, object]:
    backends: dict[str, object] = {"python": python_find_best_split}
    if cython_find_best_split is not None:
        backends["cython"] = cython_find_best_split
    return backends


@contextmanager
def use_backend(name: str):
    """Temporarily route find_best_split through the named backend."""
    global find_best_split, BACKEND
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"backend {name!r} unavailable (have: {sorted(backends)})")
    prev_fn, prev_name = find_best_split, BACKEND
    find_best_split, BACKEND = backends[name], name
    try:
        yield
    finally:
        find_best_split, BACKEND = prev_fn, prev_name
