"""Numeric kernels: numba-jitted fast path with a pure-numpy fallback.

The backend is chosen once at import time from the ``STAGDEP_BACKEND``
environment variable:

* ``auto`` (default) -- numba if importable, else numpy
* ``numba``          -- require numba, fail if unavailable
* ``numpy``          -- force the pure-numpy fallback

Shared data layout: classifier weight tables are ``(features, actions)``
float64 arrays whose final ``dense_dim`` rows belong to the dense block;
sparse feature ids are int32, CSR index pointers int64. All argmax
tie-breaks select the lowest index. ``benchmarks/bench_backends.py``
compares the two backends on the same workloads.
"""

from __future__ import annotations

import os

_REQUESTED = os.environ.get("STAGDEP_BACKEND", "auto").strip().lower()
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"STAGDEP_BACKEND={_REQUESTED!r}: expected auto, numba, or numpy"
    )

if _REQUESTED == "numpy":
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        if _REQUESTED == "numba":
            raise
        from . import _numpy as _impl

        BACKEND = "numpy"

score_rows = _impl.score_rows
perceptron_epoch = _impl.perceptron_epoch
average_weights = _impl.average_weights
hinge_epoch = _impl.hinge_epoch
accumulate_stats = _impl.accumulate_stats
power_iteration = _impl.power_iteration
project_sparse = _impl.project_sparse

__all__ = [
    "BACKEND",
    "score_rows",
    "perceptron_epoch",
    "average_weights",
    "hinge_epoch",
    "accumulate_stats",
    "power_iteration",
    "project_sparse",
]
