"""Matching graph built from a detector error model, and MWPM decoding.

Edge weights are ``ln((1 - p) / p)`` quantized to integers so that matching
weights can be compared exactly.  All-pairs shortest paths (with the
observable parity of each path) are precomputed; a syndrome is then solved
on the complete graph of its defects, where a pair costs the cheaper of the
direct path and sending both ends to the boundary.  Defects split into
independent clusters: two defects interact only if their path is cheaper
than both boundary paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .blossom import min_weight_perfect_matching
from .dem import DetectorErrorModel

WEIGHT_SCALE = 1000
MAX_EXHAUSTIVE_DEFECTS = 16


class DefectError(ValueError):
    pass


def edge_weight(p: float) -> int:
    if p <= 0:
        raise ValueError("edge probability must be positive")
    p = min(p, 0.5 - 1e-12)
    return max(1, int(round(WEIGHT_SCALE * math.log((1 - p) / p))))


@dataclass
class Correction:
    observables: int
    pairs: list  # (defect, partner) with partner -1 for the boundary
    weight: int


@njit(cache=True)
def _path_parities(pred, obs_adj_rows, obs_adj_cols, obs_adj_vals, order, n):
    out = np.zeros((n, n), dtype=np.int64)
    for s in range(n):
        for k in range(n):
            v = order[s, k]
            p = pred[s, v]
            if p < 0:
                continue
            # edge observable lookup in sorted CSR row of p
            lo, hi = obs_adj_rows[p], obs_adj_rows[p + 1]
            val = 0
            while lo < hi:
                mid = (lo + hi) // 2
                if obs_adj_cols[mid] < v:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < obs_adj_rows[p + 1] and obs_adj_cols[lo] == v:
                val = obs_adj_vals[lo]
            out[s, v] = out[s, p] ^ val
    return out


class MatchingGraph:
    def __init__(self, num_detectors: int, num_observables: int, edges: dict):
        """``edges``: {(u, v): (probability, observable mask)} with ``v = -1`` for the boundary."""
        self.num_detectors = num_detectors
        self.num_observables = num_observables
        self.boundary = num_detectors
        n = num_detectors + 1
        self.edges = {}
        rows, cols, w, o = [], [], [], []
        for (u, v), (p, obs) in sorted(edges.items()):
            v = self.boundary if v < 0 else v
            if not (0 <= u < num_detectors and 0 <= v <= num_detectors) or u == v:
                raise DefectError(f"edge ({u}, {v}) references a missing detector")
            a, b = min(u, v), max(u, v)
            wt = edge_weight(p)
            self.edges[(a, b)] = (p, obs, wt)
            rows += [a, b]
            cols += [b, a]
            w += [wt, wt]
            o += [obs, obs]
        self._w = csr_matrix((np.array(w, dtype=np.float64), (rows, cols)), shape=(n, n))
        obs_adj = csr_matrix((np.array(o, dtype=np.int64) + 1, (rows, cols)), shape=(n, n))
        obs_adj.sort_indices()
        dist, pred = dijkstra(self._w, directed=False, return_predecessors=True)
        unreachable = ~np.isfinite(dist)
        big = np.iinfo(np.int64).max // 8
        self.dist = np.where(unreachable, big, np.nan_to_num(dist, posinf=0)).astype(np.int64)
        order = np.argsort(np.where(unreachable, np.inf, dist), axis=1, kind="stable").astype(np.int64)
        self.parity = _path_parities(pred.astype(np.int64), obs_adj.indptr.astype(np.int64),
                                     obs_adj.indices.astype(np.int64), obs_adj.data.astype(np.int64) - 1,
                                     order, n)
        # components carrying no observable-flipping edge never change the prediction
        ncomp, label = connected_components(self._w, directed=False)
        useful = np.zeros(ncomp, dtype=bool)
        for (a, b), (_, obs, _) in self.edges.items():
            if obs:
                useful[label[a]] = True
        self.component = label
        self.relevant = useful[label[:num_detectors]]
        self.has_boundary_path = self.dist[: num_detectors, self.boundary] < big

    @classmethod
    def from_dem(cls, dem: DetectorErrorModel) -> "MatchingGraph":
        edges: dict = {}
        for (dets, obs), p in sorted(dem.merged_components().items()):
            if len(dets) == 0:
                continue
            key = (dets[0], dets[1]) if len(dets) == 2 else (dets[0], -1)
            if key in edges:
                q, o = edges[key]
                if o == obs:
                    edges[key] = (q * (1 - p) + p * (1 - q), o)
                elif p > q:
                    # parallel edges with different logical effect: keep the likelier one
                    edges[key] = (p, obs)
            else:
                edges[key] = (p, obs)
        return cls(dem.num_detectors, dem.num_observables, edges)

    def reweighted(self, dem: DetectorErrorModel) -> "MatchingGraph":
        return MatchingGraph.from_dem(dem)

    def _check(self, defects):
        defects = np.asarray(defects, dtype=np.int64)
        if len(defects) and (defects.min() < 0 or defects.max() >= self.num_detectors):
            raise DefectError("defect index outside the graph")
        return defects

    def decode(self, defects) -> Correction:
        defects = self._check(defects)
        defects = defects[self.relevant[defects]] if len(defects) else defects
        pairs, weight, obs = _decode_one(defects, self.dist, self.parity, self.boundary)
        return Correction(int(obs), [(int(a), int(b)) for a, b in pairs], int(weight))

    def decode_batch(self, det_bits: np.ndarray) -> np.ndarray:
        """Predicted observable masks for a ``(shots, num_detectors)`` bit array."""
        det_bits = np.asarray(det_bits, dtype=np.uint8)
        if det_bits.ndim != 2 or det_bits.shape[1] != self.num_detectors:
            raise DefectError(f"expected {self.num_detectors} detector columns, got shape {det_bits.shape}")
        mask = det_bits[:, self.relevant].astype(bool)
        cols = np.flatnonzero(self.relevant).astype(np.int64)
        shot_idx, pos = np.nonzero(mask)
        indptr = np.zeros(det_bits.shape[0] + 1, dtype=np.int64)
        np.cumsum(np.bincount(shot_idx, minlength=det_bits.shape[0]), out=indptr[1:])
        return _decode_many(indptr, cols[pos], self.dist, self.parity, self.boundary)


@njit(cache=True)
def _clusters(defects, dist, boundary):
    k = len(defects)
    parent = np.arange(k)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(k):
        di = defects[i]
        for j in range(i + 1, k):
            dj = defects[j]
            if dist[di, dj] < dist[di, boundary] + dist[dj, boundary]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    roots = np.empty(k, dtype=np.int64)
    for i in range(k):
        roots[i] = find(i)
    return roots


@njit(cache=True)
def _solve_cluster(members, defects, dist, parity, boundary, out_pairs, npairs):
    """Match one cluster; append pairs and return (weight, observable mask, npairs)."""
    m = len(members)
    if m == 1:
        d = defects[members[0]]
        out_pairs[npairs, 0] = d
        out_pairs[npairs, 1] = -1
        return dist[d, boundary], parity[d, boundary], npairs + 1
    size = m + (m % 2)
    cost = np.zeros((size, size), dtype=np.int64)
    for a in range(m):
        da = defects[members[a]]
        for b in range(a + 1, m):
            db = defects[members[b]]
            c = min(dist[da, db], dist[da, boundary] + dist[db, boundary])
            cost[a, b] = c
            cost[b, a] = c
        if size > m:
            cost[a, m] = dist[da, boundary]
            cost[m, a] = dist[da, boundary]
    if size == 2:
        mate = np.array([1, 0])
    else:
        mate = min_weight_perfect_matching(cost)
    weight = 0
    obs = 0
    for a in range(size):
        b = mate[a]
        if b < a:
            continue
        weight += cost[a, b]
        if b >= m:
            da = defects[members[a]]
            obs ^= parity[da, boundary]
            out_pairs[npairs, 0] = da
            out_pairs[npairs, 1] = -1
            npairs += 1
            continue
        da = defects[members[a]]
        db = defects[members[b]]
        if dist[da, db] <= dist[da, boundary] + dist[db, boundary]:
            obs ^= parity[da, db]
            out_pairs[npairs, 0] = da
            out_pairs[npairs, 1] = db
            npairs += 1
        else:
            obs ^= parity[da, boundary] ^ parity[db, boundary]
            out_pairs[npairs, 0] = da
            out_pairs[npairs, 1] = -1
            out_pairs[npairs + 1, 0] = db
            out_pairs[npairs + 1, 1] = -1
            npairs += 2
    return weight, obs, npairs


@njit(cache=True)
def _decode_core(defects, dist, parity, boundary, out_pairs):
    k = len(defects)
    if k == 0:
        return 0, 0, 0
    roots = _clusters(defects, dist, boundary)
    order = np.argsort(roots, kind="mergesort")
    weight = 0
    obs = 0
    npairs = 0
    start = 0
    while start < k:
        end = start
        while end < k and roots[order[end]] == roots[order[start]]:
            end += 1
        w, o, npairs = _solve_cluster(order[start:end], defects, dist, parity, boundary, out_pairs, npairs)
        weight += w
        obs ^= o
        start = end
    return weight, obs, npairs


@njit(cache=True)
def _decode_many(indptr, flat, dist, parity, boundary):
    shots = len(indptr) - 1
    out = np.zeros(shots, dtype=np.int64)
    maxk = 0
    for s in range(shots):
        maxk = max(maxk, indptr[s + 1] - indptr[s])
    pairs = np.zeros((maxk + 1, 2), dtype=np.int64)
    for s in range(shots):
        _, o, _ = _decode_core(flat[indptr[s]:indptr[s + 1]], dist, parity, boundary, pairs)
        out[s] = o
    return out


def _decode_one(defects, dist, parity, boundary):
    pairs = np.zeros((len(defects) + 1, 2), dtype=np.int64)
    w, o, n = _decode_core(defects, dist, parity, boundary, pairs)
    return [tuple(p) for p in pairs[:n]], w, o


@njit(cache=True)
def _exhaustive(defects, dist, boundary):
    k = len(defects)
    full = (1 << k) - 1
    best = np.full(1 << k, np.iinfo(np.int64).max // 4, dtype=np.int64)
    choice = np.full(1 << k, -2, dtype=np.int64)
    best[0] = 0
    for mask in range(1, full + 1):
        i = 0
        while not (mask >> i) & 1:
            i += 1
        rest = mask ^ (1 << i)
        di = defects[i]
        c = dist[di, boundary] + best[rest]
        if c < best[mask]:
            best[mask] = c
            choice[mask] = -1
        for j in range(i + 1, k):
            if (rest >> j) & 1:
                c = dist[di, defects[j]] + best[rest ^ (1 << j)]
                if c < best[mask]:
                    best[mask] = c
                    choice[mask] = j
    return best[full], choice


def decode_exhaustive(graph: MatchingGraph, defects) -> Correction:
    """Optimal defect pairing by dynamic programming over subsets (oracle)."""
    defects = graph._check(defects)
    if len(defects) > MAX_EXHAUSTIVE_DEFECTS:
        raise ValueError(f"exhaustive decoding supports at most {MAX_EXHAUSTIVE_DEFECTS} defects")
    defects = defects[graph.relevant[defects]] if len(defects) else defects
    if len(defects) == 0:
        return Correction(0, [], 0)
    weight, choice = _exhaustive(defects, graph.dist, graph.boundary)
    mask = (1 << len(defects)) - 1
    pairs, obs = [], 0
    while mask:
        i = (mask & -mask).bit_length() - 1
        j = int(choice[mask])
        di = int(defects[i])
        if j < 0:
            pairs.append((di, -1))
            obs ^= int(graph.parity[di, graph.boundary])
            mask ^= 1 << i
        else:
            dj = int(defects[j])
            pairs.append((di, dj))
            obs ^= int(graph.parity[di, dj])
            mask ^= (1 << i) | (1 << j)
    return Correction(obs, pairs, int(weight))


def decode_mwpm(graph: MatchingGraph, defects) -> Correction:
    return graph.decode(defects)
