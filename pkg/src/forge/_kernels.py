"""Backend selection for the simulation hot loops.

The compiled extension `forge._speed` is used when available; the
pure-Python twin `forge._pure` is the fallback.  Both expose the same
functions and consume random streams identically.  Set FORGE_BACKEND=pure
to force the fallback (used by the cross-check tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("FORGE_BACKEND", "").lower() == "pure":
    from . import _pure as kernels

    BACKEND = "pure"
else:
    try:
        from . import _speed as kernels  # type: ignore[no-redef]

        BACKEND = "speed"
    except ImportError:
        from . import _pure as kernels  # type: ignore[no-redef]

        BACKEND = "pure"

peel_run = kernels.peel_run
peel_run_many = kernels.peel_run_many
qinf_visits = kernels.qinf_visits
snake_tree_stats = kernels.snake_tree_stats
snake_tree_arrays = kernels.snake_tree_arrays
