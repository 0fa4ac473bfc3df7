"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``JOINAGG_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("JOINAGG_PURE_PYTHON", "") not in ("", "0"):
    impl = _kernels_py
else:
    try:
        from . import _ckernels as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _kernels_py

BACKEND = "cython" if impl is not _kernels_py else "python"

hash_join = impl.hash_join
key_set = impl.key_set
filter_in = impl.filter_in
filter_out = impl.filter_out
aggregate = impl.aggregate
project_one = impl.project_one
group_count = impl.group_count
