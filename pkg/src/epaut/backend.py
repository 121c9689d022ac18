"""Selects the pairwise-kernel backend at import time.

The compiled Cython extension is preferred when it imported cleanly; the
pure-numpy twin is the fallback.  Setting EPAUT_DISABLE_EXT=1 forces the
fallback (useful for benchmarking and for debugging the extension).
"""

import os

from . import _pairwise_py

BACKEND = "python"
pairwise = _pairwise_py

if not os.environ.get("EPAUT_DISABLE_EXT"):
    try:
        from . import _pairwise as _compiled
    except ImportError:
        pass
    else:
        pairwise = _compiled
        BACKEND = "compiled"
