"""Import-time selection of the kernel backend.

Prefers the compiled extension; falls back to the numpy implementation when
the extension was not built or when ``BOUGEROL_PURE_PYTHON`` is set to a
non-empty value other than ``0``.
"""

from __future__ import annotations

import os

_force_fallback = os.environ.get("BOUGEROL_PURE_PYTHON", "") not in ("", "0")

if _force_fallback:
    from . import _kernels_py as kernels

    COMPILED = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        COMPILED = False


def backend_name() -> str:
    return "cython" if COMPILED else "numpy"
