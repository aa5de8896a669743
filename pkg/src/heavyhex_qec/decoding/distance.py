"""Circuit-level code distance of a detector error model.

The distance is the smallest number of mechanisms whose detector signatures
cancel while some observable flips.  Signatures are hashed (one random 64-bit
word per detector, XOR-combined) so that weights up to four can be searched
exhaustively by meet-in-the-middle over single mechanisms and pairs.  An
upper bound comes from the shortest odd cycle in the decomposed matching
graph; when the bounds meet the result is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .dem import DetectorErrorModel

MAX_PAIR_MECHANISMS = 6000


@dataclass(frozen=True)
class DistanceResult:
    lower: int  # no logical error of weight below this exists
    upper: int | None  # weight of a witnessed logical error
    witness: tuple[int, ...] = ()  # mechanism indices of the exhaustive witness, if one was found

    @property
    def exact(self) -> bool:
        return self.upper is not None and self.lower == self.upper

    @property
    def value(self) -> int:
        if not self.exact:
            raise ValueError(f"distance only bounded: {self.lower} <= d <= {self.upper}")
        return self.lower


def _hashes(dem: DetectorErrorModel, seed: int = 2024):
    rng = np.random.default_rng(seed)
    det_h = rng.integers(1, 2**63, size=dem.num_detectors, dtype=np.int64).astype(np.uint64)
    obs_h = rng.integers(1, 2**63, size=dem.num_observables, dtype=np.int64).astype(np.uint64)
    out = np.zeros(len(dem.mechanisms), dtype=np.uint64)
    for i, m in enumerate(dem.mechanisms):
        h = np.uint64(0)
        for d in m.detectors:
            h ^= det_h[d]
        for o in range(dem.num_observables):
            if (m.observables >> o) & 1:
                h ^= obs_h[o]
        out[i] = h
    targets = []
    for mask in range(1, 2 ** dem.num_observables):
        t = np.uint64(0)
        for o in range(dem.num_observables):
            if (mask >> o) & 1:
                t ^= obs_h[o]
        targets.append(t)
    return out, targets


def _is_logical(dem: DetectorErrorModel, idx) -> bool:
    dets: set[int] = set()
    obs = 0
    for i in idx:
        dets ^= set(dem.mechanisms[i].detectors)
        obs ^= dem.mechanisms[i].observables
    return not dets and obs != 0


def _exhaustive(dem: DetectorErrorModel, max_weight: int):
    """Smallest weight (<= max_weight) logical error and a witness, else (None, ())."""
    h, targets = _hashes(dem)
    n = len(h)
    pos = {}
    for i, v in enumerate(h.tolist()):
        pos.setdefault(v, []).append(i)
    for t in targets:
        for i in pos.get(int(t), []):
            if _is_logical(dem, (i,)):
                return 1, (i,)
    if max_weight < 2:
        return None, ()
    for t in targets:
        for i in range(n):
            for j in pos.get(int(h[i] ^ t), []):
                if j > i and _is_logical(dem, (i, j)):
                    return 2, (i, j)
    if max_weight < 3 or n > MAX_PAIR_MECHANISMS:
        return None, ()
    iu, ju = np.triu_indices(n, k=1)
    ph = h[iu] ^ h[ju]
    order = np.argsort(ph, kind="stable")
    ph_sorted = ph[order]

    def pairs_equal(values):
        lo = np.searchsorted(ph_sorted, values, side="left")
        hi = np.searchsorted(ph_sorted, values, side="right")
        return lo, hi

    for t in targets:
        lo, hi = pairs_equal(h ^ t)
        for k in np.flatnonzero(hi > lo):
            for r in range(lo[k], hi[k]):
                a, b = iu[order[r]], ju[order[r]]
                if k not in (a, b) and _is_logical(dem, (k, a, b)):
                    return 3, tuple(sorted((int(k), int(a), int(b))))
    if max_weight < 4:
        return None, ()
    for t in targets:
        lo, hi = pairs_equal(ph_sorted ^ t)
        for k in np.flatnonzero(hi > lo):
            a, b = iu[order[k]], ju[order[k]]
            for r in range(lo[k], hi[k]):
                c, e = iu[order[r]], ju[order[r]]
                idx = {int(a), int(b), int(c), int(e)}
                if len(idx) == 4 and _is_logical(dem, tuple(idx)):
                    return 4, tuple(sorted(idx))
    return None, ()


def graph_upper_bound(dem: DetectorErrorModel) -> int | None:
    """Fewest decomposed edges forming a detector-free cycle with odd observable parity.

    Every component edge is itself the signature of some mechanism, so this is
    an upper bound on the distance.  Only the first observable is considered.
    """
    nd = dem.num_detectors
    boundary = nd
    edges = {}
    for m in dem.mechanisms:
        for dets, obs in m.components:
            if not dets or len(dets) > 2:
                continue
            u, v = (dets[0], boundary) if len(dets) == 1 else dets
            edges.setdefault((u, v), set()).add(obs & 1)
    if not edges:
        return None
    rows, cols = [], []
    nn = nd + 1
    for (u, v), parities in edges.items():
        for par in parities:
            for s in (0, 1):
                rows += [u + s * nn, v + s * nn]
                cols += [v + (s ^ par) * nn, u + (s ^ par) * nn]
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(2 * nn, 2 * nn)).tocsr()
    best = None
    sources = sorted({u for u, _ in edges} | {v for _, v in edges})
    dist = dijkstra(graph, unweighted=True, indices=sources)
    for k, s in enumerate(sources):
        d = dist[k, s + nn]
        if np.isfinite(d) and (best is None or d < best):
            best = int(d)
    return best


def distance_bounds(dem: DetectorErrorModel, max_weight: int = 4) -> DistanceResult:
    upper = graph_upper_bound(dem)
    found, witness = _exhaustive(dem, max_weight)
    if found is not None:
        return DistanceResult(found, found, witness)
    searched = max_weight if len(dem.mechanisms) <= MAX_PAIR_MECHANISMS else min(max_weight, 2)
    return DistanceResult(searched + 1, upper)


def min_distance(dem: DetectorErrorModel, max_weight: int = 4) -> int:
    """Exact circuit distance; raises if the bounds do not meet."""
    return distance_bounds(dem, max_weight).value
