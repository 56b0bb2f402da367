"""Independent reference implementations used as test oracles.

Everything here is written from the definitions, with plain loops and no
reuse of package internals beyond the data types.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

VAR_ATOL = 1e-12
VAR_RTOL = 1e-9


def node_distance_ref(a, b) -> float:
    d = 0.0
    if a.scene != b.scene:
        d += 1.0
    if a.activity != b.activity:
        d += 1.0
    union = set(a.objects) | set(b.objects)
    if union:
        d += 1.0 - len(set(a.objects) & set(b.objects)) / len(union)
    return d


def silhouette_ref(M, labels) -> list[float]:
    n = len(labels)
    out = []
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            out.append(0.0)
            continue
        a = sum(M[i][j] for j in same) / len(same)
        b = math.inf
        for c in set(labels):
            if c == labels[i]:
                continue
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(M[i][j] for j in members) / len(members))
        denom = max(a, b)
        out.append(0.0 if denom == 0 else (b - a) / denom)
    return out


def population_variance(points) -> float:
    pts = [tuple(p) for p in points]
    n = len(pts)
    total = 0.0
    for axis in range(len(pts[0])):
        mean = sum(p[axis] for p in pts) / n
        total += sum((p[axis] - mean) ** 2 for p in pts) / n
    return total


def greedy_order_ref(seed, keys, coords, labels_of, K=math.inf):
    """Exhaustive min-variance-increase aggregation.

    At every step each admissible neighbour is tried by recomputing the
    variance of the enlarged set from scratch. Ties (same tolerance as the
    package) go to the smaller summed distance to the two seed nodes, then
    to the smaller (day, slot) key.
    """
    P = [seed[0], seed[1]]
    order = list(P)
    while True:
        cols = {j for _, j in P}
        cand = [k for k in keys if k not in P and any(abs(k[1] - j) <= 1 for j in cols)]
        if not cand:
            break
        scored = [(population_variance([coords[x] for x in P + [k]]), k) for k in cand]
        best = min(v for v, _ in scored)
        tied = [k for v, k in scored if v <= best + VAR_ATOL + VAR_RTOL * abs(best)]
        sd = {k: node_distance_ref(labels_of[seed[0]], labels_of[k]) + node_distance_ref(labels_of[seed[1]], labels_of[k]) for k in tied}
        m = min(sd.values())
        pick = min(k for k in tied if sd[k] == m)
        if dict((k, v) for v, k in scored)[pick] > K:
            break
        P.append(pick)
        order.append(pick)
    return order


def dbscan_ref(X, eps, min_pts):
    """Core set and the partition of core points by density connectivity,
    by repeated closure over the epsilon graph."""
    n = len(X)
    dist = [[float(np.linalg.norm(np.asarray(X[i]) - np.asarray(X[j]))) for j in range(n)] for i in range(n)]
    core = {i for i in range(n) if sum(1 for j in range(n) if dist[i][j] <= eps) >= min_pts}
    parts = []
    todo = set(core)
    while todo:
        start = min(todo)
        comp = {start}
        changed = True
        while changed:
            changed = False
            for i in list(comp):
                for j in core:
                    if j not in comp and dist[i][j] <= eps:
                        comp.add(j)
                        changed = True
        parts.append(frozenset(comp))
        todo -= comp
    reachable = {i for i in range(n) if any(dist[i][c] <= eps for c in core)}
    noise = set(range(n)) - reachable
    return core, set(parts), noise


def pairwise(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    return np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))


def all_pairs(n):
    return itertools.combinations(range(n), 2)
