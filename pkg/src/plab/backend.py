"""Kernel backend selection.

The compiled Cython kernels are used when importable; otherwise the package
falls back to the pure-Python reference kernels.  Both produce bit-identical
results.  Set ``PLAB_KERNELS=python`` to force the fallback (e.g. for
benchmarking) or ``PLAB_KERNELS=compiled`` to fail loudly when the extension
is missing.
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("PLAB_KERNELS", "auto").strip().lower()

if _choice in ("auto", ""):
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = _kernels_py
elif _choice in ("compiled", "c"):
    from . import _kernels as kernels  # type: ignore[attr-defined]
elif _choice in ("python", "py", "pure"):
    kernels = _kernels_py
else:
    raise RuntimeError(f"PLAB_KERNELS={_choice!r} not understood (auto|compiled|python)")

BACKEND = kernels.BACKEND_NAME


def available_backends() -> dict[str, object]:
    """Importable kernel modules by name (used by the benchmark)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
