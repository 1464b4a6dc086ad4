"""Hot kernels: compiled extension when available, pure Python otherwise.

Set GLYPHEDIT_PURE=1 to force the pure implementations (used by the
parity tests and the benchmark).
"""

import os

from . import pure

if os.environ.get("GLYPHEDIT_PURE") == "1":
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

levenshtein = _impl.levenshtein
polygon_fill = _impl.polygon_fill

__all__ = ["levenshtein", "polygon_fill", "BACKEND", "pure"]
