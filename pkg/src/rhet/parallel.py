"""Worker-count plumbing shared by the estimator and the mapper.

All heavy lifting is batched FFT work, so parallelism is delegated to the
scipy.fft worker pool. Output is bit-identical for any worker count: each
transform in a batch is computed independently and every reduction
downstream runs in a fixed order.
"""
from __future__ import annotations

import os


def resolve_workers(workers=None) -> int:
    """Effective worker count.

    Explicit argument wins but is capped by the RHET_THREADS environment
    variable when that is set; with no argument, RHET_THREADS is the
    default, else 1 (deterministic single-thread baseline).
    """
    cap_env = os.environ.get("RHET_THREADS", "").strip()
    cap = None
    if cap_env:
        cap = int(cap_env)
        if cap < 1:
            raise ValueError("RHET_THREADS must be >= 1")
    if workers is None:
        return cap if cap is not None else 1
    w = int(workers)
    if w < 1:
        raise ValueError("workers must be >= 1")
    return min(w, cap) if cap is not None else w
