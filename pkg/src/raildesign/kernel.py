"""Selects the propagation engine: compiled extension when built, pure
Python otherwise.  Set RAILDESIGN_PURE=1 to force the fallback."""

import os

if os.environ.get("RAILDESIGN_PURE") == "1":
    from ._core_py import PropEngine

    BACKEND = "python"
else:
    try:
        from ._core import PropEngine  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from ._core_py import PropEngine  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["PropEngine", "BACKEND"]
