"""Kernel backend selection.

Imports the compiled extension when it exists, otherwise the numpy
fallback. Set AUTOWEAK_NO_EXT=1 to force the fallback (used by the
benchmark and the backend-agreement tests).
"""

import os

from . import _fallback

if os.environ.get("AUTOWEAK_NO_EXT") == "1":
    _impl = _fallback
    HAVE_COMPILED = False
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
        HAVE_COMPILED = True
    except ImportError:
        _impl = _fallback
        HAVE_COMPILED = False

stump_scan = _impl.stump_scan
ds_estep = _impl.ds_estep

BACKEND = "compiled" if HAVE_COMPILED else "fallback"
