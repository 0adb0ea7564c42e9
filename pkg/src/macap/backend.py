"""Kernel backend selection.

The compiled extension ``macap._core`` is used when it imported cleanly;
otherwise the pure-numpy twin ``macap._pycore`` takes over.  Set the
environment variable ``MACAP_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("MACAP_PURE_PYTHON") == "1":
    from . import _pycore as impl

    BACKEND = "python"
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _pycore as impl  # type: ignore[no-redef]

        BACKEND = "python"

point_eval = impl.point_eval
mi_block = impl.mi_block
fixed_point = impl.fixed_point
