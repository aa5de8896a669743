"""Exact weighted matching on dense graphs, compiled with numba.

``max_weight_matching`` is the O(n^3) primal-dual blossom algorithm on an
adjacency matrix of non-negative integer weights (0 means no edge).
Vertices are 1-based inside the kernel; index 0 is the null vertex.
Dual labels are kept doubled so all arithmetic stays in integers.

``min_weight_perfect_matching`` reduces to it through ``w' = M - w`` with
``M`` larger than any possible weight difference between perfect matchings
and matchings with one edge fewer.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = np.int64(1) << 60


@njit(cache=True)
def _dist(gu, gv, gw, lab, a, b):
    return lab[gu[a, b]] + lab[gv[a, b]] - gw[a, b] * 2


@njit(cache=True)
def _update_slack(gu, gv, gw, lab, slack, u, x):
    if slack[x] == 0 or _dist(gu, gv, gw, lab, u, x) < _dist(gu, gv, gw, lab, slack[x], x):
        slack[x] = u


@njit(cache=True)
def _set_slack(n, gu, gv, gw, lab, slack, st, S, x):
    slack[x] = 0
    for u in range(1, n + 1):
        if gw[u, x] > 0 and st[u] != x and S[st[u]] == 0:
            _update_slack(gu, gv, gw, lab, slack, u, x)


@njit(cache=True)
def _q_push(n, flower, flen, queue, qs, x):
    if x <= n:
        queue[qs[1]] = x
        qs[1] += 1
    else:
        for i in range(flen[x]):
            _q_push(n, flower, flen, queue, qs, flower[x, i])


@njit(cache=True)
def _set_st(n, flower, flen, st, x, b):
    st[x] = b
    if x > n:
        for i in range(flen[x]):
            _set_st(n, flower, flen, st, flower[x, i], b)


@njit(cache=True)
def _get_pr(flower, flen, b, xr):
    pr = 0
    while flower[b, pr] != xr:
        pr += 1
    if pr % 2 == 1:
        lo, hi = 1, flen[b] - 1
        while lo < hi:
            t = flower[b, lo]
            flower[b, lo] = flower[b, hi]
            flower[b, hi] = t
            lo += 1
            hi -= 1
        return flen[b] - pr
    return pr


@njit(cache=True)
def _set_match(n, gu, gv, flower, flen, flower_from, match, u, v):
    match[u] = gv[u, v]
    if u > n:
        xr = flower_from[u, gu[u, v]]
        pr = _get_pr(flower, flen, u, xr)
        for i in range(pr):
            _set_match(n, gu, gv, flower, flen, flower_from, match, flower[u, i], flower[u, i ^ 1])
        _set_match(n, gu, gv, flower, flen, flower_from, match, xr, v)
        m = flen[u]
        tmp = flower[u, :m].copy()
        for i in range(m):
            flower[u, i] = tmp[(i + pr) % m]


@njit(cache=True)
def _augment(n, gu, gv, flower, flen, flower_from, match, st, pa, u, v):
    while True:
        xnv = st[match[u]]
        _set_match(n, gu, gv, flower, flen, flower_from, match, u, v)
        if xnv == 0:
            return
        _set_match(n, gu, gv, flower, flen, flower_from, match, xnv, st[pa[xnv]])
        u = st[pa[xnv]]
        v = xnv


@njit(cache=True)
def _get_lca(match, st, pa, vis, tcount, u, v):
    tcount[0] += 1
    t = tcount[0]
    while u != 0 or v != 0:
        if u != 0:
            if vis[u] == t:
                return u
            vis[u] = t
            u = st[match[u]]
            if u != 0:
                u = st[pa[u]]
        u, v = v, u
    return 0


@njit(cache=True)
def _add_blossom(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, flower, flen, flower_from, queue, qs, u, lca, v):
    b = n + 1
    while b <= nx[0] and st[b] != 0:
        b += 1
    if b > nx[0]:
        nx[0] += 1
    lab[b] = 0
    S[b] = 0
    match[b] = match[lca]
    flen[b] = 0
    flower[b, flen[b]] = lca
    flen[b] += 1
    x = u
    while x != lca:
        flower[b, flen[b]] = x
        flen[b] += 1
        y = st[match[x]]
        flower[b, flen[b]] = y
        flen[b] += 1
        _q_push(n, flower, flen, queue, qs, y)
        x = st[pa[y]]
    lo, hi = 1, flen[b] - 1
    while lo < hi:
        t = flower[b, lo]
        flower[b, lo] = flower[b, hi]
        flower[b, hi] = t
        lo += 1
        hi -= 1
    x = v
    while x != lca:
        flower[b, flen[b]] = x
        flen[b] += 1
        y = st[match[x]]
        flower[b, flen[b]] = y
        flen[b] += 1
        _q_push(n, flower, flen, queue, qs, y)
        x = st[pa[y]]
    _set_st(n, flower, flen, st, b, b)
    for x in range(1, nx[0] + 1):
        gw[b, x] = 0
        gw[x, b] = 0
    for x in range(1, n + 1):
        flower_from[b, x] = 0
    for i in range(flen[b]):
        xs = flower[b, i]
        for x in range(1, nx[0] + 1):
            if gw[b, x] == 0 or _dist(gu, gv, gw, lab, xs, x) < _dist(gu, gv, gw, lab, b, x):
                gu[b, x] = gu[xs, x]
                gv[b, x] = gv[xs, x]
                gw[b, x] = gw[xs, x]
                gu[x, b] = gu[x, xs]
                gv[x, b] = gv[x, xs]
                gw[x, b] = gw[x, xs]
        for x in range(1, n + 1):
            if flower_from[xs, x] != 0:
                flower_from[b, x] = xs
    _set_slack(n, gu, gv, gw, lab, slack, st, S, b)


@njit(cache=True)
def _expand_blossom(n, gu, gv, gw, lab, slack, st, pa, S, flower, flen, flower_from, queue, qs, b):
    for i in range(flen[b]):
        _set_st(n, flower, flen, st, flower[b, i], flower[b, i])
    xr = flower_from[b, gu[b, pa[b]]]
    pr = _get_pr(flower, flen, b, xr)
    for i in range(0, pr, 2):
        xs = flower[b, i]
        xns = flower[b, i + 1]
        pa[xs] = gu[xns, xs]
        S[xs] = 1
        S[xns] = 0
        slack[xs] = 0
        _set_slack(n, gu, gv, gw, lab, slack, st, S, xns)
        _q_push(n, flower, flen, queue, qs, xns)
    S[xr] = 1
    pa[xr] = pa[b]
    for i in range(pr + 1, flen[b]):
        xs = flower[b, i]
        S[xs] = -1
        _set_slack(n, gu, gv, gw, lab, slack, st, S, xs)
    st[b] = 0


@njit(cache=True)
def _on_found_edge(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, vis, tcount, flower, flen, flower_from,
                   queue, qs, eu, ev):
    u = st[eu]
    v = st[ev]
    if S[v] == -1:
        pa[v] = eu
        S[v] = 1
        nu = st[match[v]]
        slack[v] = 0
        slack[nu] = 0
        S[nu] = 0
        _q_push(n, flower, flen, queue, qs, nu)
    elif S[v] == 0:
        lca = _get_lca(match, st, pa, vis, tcount, u, v)
        if lca == 0:
            _augment(n, gu, gv, flower, flen, flower_from, match, st, pa, u, v)
            _augment(n, gu, gv, flower, flen, flower_from, match, st, pa, v, u)
            return True
        _add_blossom(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, flower, flen, flower_from, queue, qs,
                     u, lca, v)
    return False


@njit(cache=True)
def _matching_phase(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, vis, tcount, flower, flen, flower_from,
                    queue, qs):
    for x in range(1, nx[0] + 1):
        S[x] = -1
        slack[x] = 0
    qs[0] = 0
    qs[1] = 0
    for x in range(1, nx[0] + 1):
        if st[x] == x and match[x] == 0:
            pa[x] = 0
            S[x] = 0
            _q_push(n, flower, flen, queue, qs, x)
    if qs[0] == qs[1]:
        return False
    while True:
        while qs[0] < qs[1]:
            u = queue[qs[0]]
            qs[0] += 1
            if S[st[u]] == 1:
                continue
            for v in range(1, n + 1):
                if gw[u, v] > 0 and st[u] != st[v]:
                    if _dist(gu, gv, gw, lab, u, v) == 0:
                        if _on_found_edge(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, vis, tcount,
                                          flower, flen, flower_from, queue, qs, gu[u, v], gv[u, v]):
                            return True
                    else:
                        _update_slack(gu, gv, gw, lab, slack, u, st[v])
        d = INF
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1:
                d = min(d, lab[b] // 2)
        for x in range(1, nx[0] + 1):
            if st[x] == x and slack[x] != 0:
                if S[x] == -1:
                    d = min(d, _dist(gu, gv, gw, lab, slack[x], x))
                elif S[x] == 0:
                    d = min(d, _dist(gu, gv, gw, lab, slack[x], x) // 2)
        for u in range(1, n + 1):
            if S[st[u]] == 0:
                if lab[u] <= d:
                    return False
                lab[u] -= d
            elif S[st[u]] == 1:
                lab[u] += d
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b:
                if S[st[b]] == 0:
                    lab[b] += d * 2
                elif S[st[b]] == 1:
                    lab[b] -= d * 2
        qs[0] = 0
        qs[1] = 0
        for x in range(1, nx[0] + 1):
            if st[x] == x and slack[x] != 0 and st[slack[x]] != x and _dist(gu, gv, gw, lab, slack[x], x) == 0:
                if _on_found_edge(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, vis, tcount, flower, flen,
                                  flower_from, queue, qs, gu[slack[x], x], gv[slack[x], x]):
                    return True
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1 and lab[b] == 0:
                _expand_blossom(n, gu, gv, gw, lab, slack, st, pa, S, flower, flen, flower_from, queue, qs, b)


@njit(cache=True)
def max_weight_matching(weights):
    """Maximum-weight matching of a symmetric (n, n) int64 matrix; returns partner index or -1."""
    n = weights.shape[0]
    size = 2 * n + 2
    gu = np.zeros((size, size), dtype=np.int64)
    gv = np.zeros((size, size), dtype=np.int64)
    gw = np.zeros((size, size), dtype=np.int64)
    wmax = 0
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            gu[u, v] = u
            gv[u, v] = v
            # doubled so the halved dual steps below stay integral
            gw[u, v] = 2 * weights[u - 1, v - 1] if u != v else 0
            wmax = max(wmax, gw[u, v])
    lab = np.zeros(size, dtype=np.int64)
    match = np.zeros(size, dtype=np.int64)
    slack = np.zeros(size, dtype=np.int64)
    st = np.zeros(size, dtype=np.int64)
    pa = np.zeros(size, dtype=np.int64)
    S = np.zeros(size, dtype=np.int64)
    vis = np.zeros(size, dtype=np.int64)
    tcount = np.zeros(1, dtype=np.int64)
    flower = np.zeros((size, size), dtype=np.int64)
    flen = np.zeros(size, dtype=np.int64)
    flower_from = np.zeros((size, n + 1), dtype=np.int64)
    queue = np.zeros(size * size + 8, dtype=np.int64)
    qs = np.zeros(2, dtype=np.int64)
    nx = np.zeros(1, dtype=np.int64)
    nx[0] = n
    for u in range(0, n + 1):
        st[u] = u
    for u in range(1, n + 1):
        flower_from[u, u] = u
        lab[u] = wmax
    while _matching_phase(n, nx, gu, gv, gw, lab, match, slack, st, pa, S, vis, tcount, flower, flen,
                          flower_from, queue, qs):
        pass
    out = np.full(n, -1, dtype=np.int64)
    for u in range(1, n + 1):
        if match[u] != 0:
            out[u - 1] = match[u] - 1
    return out


@njit(cache=True)
def min_weight_perfect_matching(cost):
    """Minimum-cost perfect matching of a complete graph with an even number of vertices."""
    n = cost.shape[0]
    cmax = 0
    for i in range(n):
        for j in range(n):
            if i != j and cost[i, j] > cmax:
                cmax = cost[i, j]
    big = n * cmax + 1
    w = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i != j:
                w[i, j] = big - cost[i, j]
    return max_weight_matching(w)
