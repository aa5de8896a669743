"""Maximum-likelihood decoding by enumerating every subset of mechanisms.

Only usable for tiny models; it bounds what any decoder can achieve.
"""

from __future__ import annotations

import numpy as np

from .dem import DetectorErrorModel

MAX_MECHANISMS = 20


def _enumerate(dem: DetectorErrorModel):
    n = len(dem.mechanisms)
    if n > MAX_MECHANISMS:
        raise ValueError(f"{n} mechanisms exceed the brute-force limit of {MAX_MECHANISMS}")
    if dem.num_detectors > 62:
        raise ValueError("brute-force decoding supports at most 62 detectors")
    sig = np.zeros(1, dtype=np.int64)
    obs = np.zeros(1, dtype=np.int64)
    prob = np.ones(1)
    for m in dem.mechanisms:
        s = sum(1 << d for d in m.detectors)
        sig = np.concatenate([sig, sig ^ s])
        obs = np.concatenate([obs, obs ^ m.observables])
        prob = np.concatenate([prob * (1 - m.probability), prob * m.probability])
    return sig, obs, prob


def class_probabilities(dem: DetectorErrorModel) -> dict[int, dict[int, float]]:
    """``{syndrome bitmask: {observable mask: probability}}`` over all error subsets."""
    sig, obs, prob = _enumerate(dem)
    key = sig * (1 << dem.num_observables) + obs
    uniq, inv = np.unique(key, return_inverse=True)
    tot = np.bincount(inv, weights=prob)
    out: dict[int, dict[int, float]] = {}
    for k, p in zip(uniq.tolist(), tot.tolist()):
        s, o = divmod(k, 1 << dem.num_observables)
        out.setdefault(s, {})[o] = p
    return out


def _pick(classes: dict[int, float]) -> int:
    # ties go to the smallest mask, so a symmetric model predicts no flip
    best = max(classes.values())
    return min(o for o, p in classes.items() if p == best)


def ml_decode_bruteforce(dem: DetectorErrorModel, syndrome) -> int:
    """Most likely observable flip mask given the fired detectors.

    ``syndrome`` is a sequence of detector bits or of fired detector indices
    (a set).  Returns 0 when the syndrome is impossible under the model.
    """
    if isinstance(syndrome, (set, frozenset)):
        target = sum(1 << d for d in syndrome)
    else:
        target = sum(1 << i for i, b in enumerate(syndrome) if b)
    sig, obs, prob = _enumerate(dem)
    sel = sig == target
    if not sel.any():
        return 0
    classes: dict[int, float] = {}
    for o, p in zip(obs[sel].tolist(), prob[sel].tolist()):
        classes[o] = classes.get(o, 0.0) + p
    return _pick(classes)


def ml_failure_rate(dem: DetectorErrorModel) -> float:
    """Exact logical failure probability of the maximum-likelihood decoder."""
    fail = 0.0
    for classes in class_probabilities(dem).values():
        pick = _pick(classes)
        fail += sum(p for o, p in classes.items() if o != pick)
    return fail
