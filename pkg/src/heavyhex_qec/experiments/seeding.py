"""Deterministic per-job seeds derived from one master seed."""

from __future__ import annotations

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return int.from_bytes(part.encode(), "little")
    if isinstance(part, float):
        # angles and probabilities: exact enough to separate grid points
        return int(round(part * 1e12)) & (2**64 - 1)
    return int(part)


def job_seed(master: int, *parts) -> int:
    """64-bit seed for the job identified by ``parts`` under ``master``."""
    ss = np.random.SeedSequence([int(master)] + [_key(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])
