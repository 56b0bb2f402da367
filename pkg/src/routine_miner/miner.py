"""Greedy variance-driven aggregation of time-slot nodes into patterns.

Mining repeats three steps until no seed is left:

1. seed: the closest pair of available nodes sharing a slot column;
2. grow: repeatedly absorb the neighbouring node (any day, slot within one
   column of the current set) that leaves the set with the smallest
   variance in the MDS plane, recording the variance after each step;
3. cut: smooth the variance trace, locate knees where it starts to rise
   steeply, keep the best-scoring prefix as a pattern and remove its nodes
   from the pool.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .distance import DistanceMatrix, node_distance
from .errors import EmptySet, NoSeed, TraceTooShort
from .mds import Embedding, embed
from .model import NodeGrid, NodeKey

# Two candidate variances closer than this are treated as equal.
VAR_ATOL = 1e-12
VAR_RTOL = 1e-9
# Second-derivative differences below this fraction of its largest value are
# rounding noise.
PEAK_RTOL = 1e-6


@dataclass(frozen=True)
class MinerConfig:
    K: float = math.inf
    sigma: float = 3.0
    # None means "pick T with a sweep"
    T: float | None = None
    sweep_range: tuple[float, float] = (0.0, 0.05)
    sweep_step: float = 0.002
    min_pattern_nodes: int = 2
    min_pattern_days: int = 2
    # cut candidates whose own silhouette against the pool is lower are rejected
    min_silhouette: float = 0.25
    max_patterns: int | None = None
    frq: float = 0.5
    # re-run MDS on the remaining pool before every extraction
    reembed: bool = True
    dim: int = 2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        lo, hi = self.sweep_range
        if not 0 <= lo < hi:
            raise ValueError("sweep range needs 0 <= lo < hi")
        if not self.sweep_step > 0:
            raise ValueError("sweep step must be positive")
        if self.min_pattern_nodes < 2:
            raise ValueError("min_pattern_nodes must be >= 2")
        if self.max_patterns is not None and self.max_patterns < 0:
            raise ValueError("max_patterns must be >= 0")

    def sweep_values(self) -> list[float]:
        lo, hi = self.sweep_range
        n = int(math.floor((hi - lo) / self.sweep_step + 1e-9))
        return [round(lo + i * self.sweep_step, 12) for i in range(n + 1)]


@dataclass(frozen=True)
class VarianceTrace:
    """Aggregation record of one growth run.

    ``order[:2]`` is the seed; ``v[0]`` is the seed distance and ``v[t]``
    (t >= 1) the variance of ``order[:t + 2]`` in the embedding plane.
    """

    order: tuple[NodeKey, ...]
    v: tuple[float, ...]

    def __post_init__(self):
        if len(self.v) != len(self.order) - 1:
            raise ValueError("len(v) must be len(order) - 1")

    def prefix(self, k: int) -> tuple[NodeKey, ...]:
        """Nodes aggregated up to and including trace index ``k``."""
        return self.order[: k + 2]

    def sse(self) -> np.ndarray:
        """Within-set sum of squares per step (excludes the seed distance)."""
        sizes = np.arange(3, len(self.order) + 1)
        return np.asarray(self.v[1:]) * sizes


@dataclass(frozen=True)
class Pattern:
    id: int
    nodes: frozenset[NodeKey]
    seed: tuple[NodeKey, NodeKey]
    threshold_used: float | None
    cut_index: int
    scene: str
    activity: str
    objects: tuple[tuple[str, int], ...]

    @property
    def days(self) -> set[int]:
        return {i for i, _ in self.nodes}

    def sorted_nodes(self) -> list[NodeKey]:
        return sorted(self.nodes)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "threshold_used": self.threshold_used,
            "cut_index": self.cut_index,
            "seed": [list(self.seed[0]), list(self.seed[1])],
            "nodes": [{"day_index": i, "slot_index": j} for i, j in self.sorted_nodes()],
            "scene": self.scene,
            "activity": self.activity,
            "objects": [{"label": lab, "node_count": c} for lab, c in self.objects],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Pattern":
        return cls(
            id=int(d["id"]),
            nodes=frozenset((int(n["day_index"]), int(n["slot_index"])) for n in d["nodes"]),
            seed=tuple(tuple(int(x) for x in s) for s in d["seed"]),
            threshold_used=d.get("threshold_used"),
            cut_index=int(d.get("cut_index", -1)),
            scene=d.get("scene", ""),
            activity=d.get("activity", ""),
            objects=tuple((o["label"], int(o["node_count"])) for o in d.get("objects", [])),
        )


@dataclass(frozen=True)
class PatternSet:
    patterns: tuple[Pattern, ...]
    unassigned: frozenset[NodeKey]
    method: str = "routine-miner"
    params: dict = field(default_factory=dict)

    def labels(self) -> dict[NodeKey, int]:
        return {k: p.id for p in self.patterns for k in p.nodes}

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "params": self.params,
            "patterns": [p.to_json() for p in self.patterns],
            "unassigned": [{"day_index": i, "slot_index": j} for i, j in sorted(self.unassigned)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "PatternSet":
        return cls(
            patterns=tuple(Pattern.from_json(p) for p in d["patterns"]),
            unassigned=frozenset((int(n["day_index"]), int(n["slot_index"])) for n in d.get("unassigned", [])),
            method=d.get("method", "routine-miner"),
            params=d.get("params", {}),
        )


def summarise_labels(grid: NodeGrid, keys: Iterable[NodeKey]) -> tuple[str, str, tuple[tuple[str, int], ...]]:
    nodes = [grid.nodes[k] for k in keys]
    scenes = Counter(n.scene for n in nodes)
    acts = Counter(n.activity for n in nodes)
    objs = Counter(lab for n in nodes for lab in n.objects)

    def mode(c: Counter) -> str:
        if not c:
            return ""
        return min(c, key=lambda lab: (-c[lab], lab))

    ranked = tuple(sorted(objs.items(), key=lambda kv: (-kv[1], kv[0])))
    return mode(scenes), mode(acts), ranked


def cluster_variance(points) -> float:
    """Sum of per-axis population variances."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise EmptySet("variance of an empty set")
    if pts.ndim == 1:
        pts = pts[:, None]
    return float(pts.var(axis=0).sum())


def neighbours(P: Iterable[NodeKey], grid: NodeGrid, excluded: Iterable[NodeKey] = ()) -> set[NodeKey]:
    P = set(P)
    blocked = P | set(excluded)
    cols = {j for _, j in P}
    reach = cols | {j - 1 for j in cols} | {j + 1 for j in cols}
    return {k for k in grid.nodes if k[1] in reach and k not in blocked}


def find_seed(
    grid: NodeGrid,
    D: DistanceMatrix,
    excluded: Iterable[NodeKey] = (),
    banned: Iterable[tuple[NodeKey, NodeKey]] = (),
) -> tuple[NodeKey, NodeKey]:
    """Closest available same-slot pair; ties go to the smallest
    (first day, second day, slot)."""
    excluded = set(excluded)
    banned = set(banned)
    pos = D.index()
    by_col: dict[int, list[NodeKey]] = {}
    for k in grid.keys():
        if k not in excluded:
            by_col.setdefault(k[1], []).append(k)

    best = None
    for j, col in by_col.items():
        if len(col) < 2:
            continue
        idx = np.array([pos[k] for k in col])
        sub = D.values[np.ix_(idx, idx)]
        for a in range(len(col)):
            for b in range(a + 1, len(col)):
                pair = (col[a], col[b])
                if pair in banned:
                    continue
                rank = (sub[a, b], col[a][0], col[b][0], j)
                if best is None or rank < best[0]:
                    best = (rank, pair)
    if best is None:
        raise NoSeed("no slot column holds two available nodes")
    return best[1]


class _Arrays:
    """Positional views of a grid shared by every growth run.

    The embedding may cover only part of the grid (the current pool); nodes
    outside it are never candidates.
    """

    def __init__(self, grid: NodeGrid, embedding: Embedding, D: DistanceMatrix | None = None):
        self.keys = grid.keys()
        self.pos = {k: p for p, k in enumerate(self.keys)}
        self.slots = np.array([j for _, j in self.keys], dtype=int)
        self.coords = np.zeros((len(self.keys), embedding.coords.shape[1]))
        self.embedded = np.zeros(len(self.keys), dtype=bool)
        for k, xy in zip(embedding.node_ids, embedding.coords):
            self.coords[self.pos[k]] = xy
            self.embedded[self.pos[k]] = True
        self.spd = grid.slots_per_day
        self.grid = grid
        self.D = None if D is None else D.values

    def dist(self, p: int, q: np.ndarray) -> np.ndarray:
        if self.D is not None:
            return self.D[p, q]
        a = self.grid.nodes[self.keys[p]]
        return np.array([node_distance(a, self.grid.nodes[self.keys[x]]) for x in q])


def grow(
    seed: tuple[NodeKey, NodeKey],
    grid: NodeGrid,
    embedding: Embedding,
    cfg: MinerConfig | None = None,
    excluded: Iterable[NodeKey] = (),
    D: DistanceMatrix | None = None,
    _arrays: _Arrays | None = None,
) -> VarianceTrace:
    """Grow a set from ``seed`` by minimum-variance neighbour absorption.

    Ties in the new variance are broken by the smaller summed distance to the
    two seed nodes, then by (day_index, slot_index). Growth stops when no
    neighbour is left or when the best candidate would push the variance
    above ``cfg.K`` (that candidate is not added).
    """
    cfg = cfg or MinerConfig()
    arr = _arrays or _Arrays(grid, embedding, D)
    a, b = arr.pos[seed[0]], arr.pos[seed[1]]

    avail = arr.embedded.copy()
    for k in excluded:
        avail[arr.pos[k]] = False
    if not (avail[a] and avail[b]):
        raise ValueError("seed nodes must be embedded and not excluded")
    avail[a] = avail[b] = False

    near = np.zeros(arr.spd, dtype=bool)

    def cover(j: int):
        near[max(j - 1, 0): j + 2] = True

    cover(arr.slots[a])
    cover(arr.slots[b])

    order = [a, b]
    mu = (arr.coords[a] + arr.coords[b]) / 2.0
    sse = float(((arr.coords[[a, b]] - mu) ** 2).sum())
    v = [float(node_distance(grid.nodes[seed[0]], grid.nodes[seed[1]]))]

    while True:
        cand = np.flatnonzero(avail & near[arr.slots])
        if cand.size == 0:
            break
        m = len(order)
        diff = arr.coords[cand] - mu
        var_new = (sse + m / (m + 1) * (diff * diff).sum(axis=1)) / (m + 1)
        best = var_new.min()
        tied = cand[var_new <= best + VAR_ATOL + VAR_RTOL * abs(best)]
        if tied.size > 1:
            sd = arr.dist(a, tied) + arr.dist(b, tied)
            tied = tied[sd == sd.min()]
        pick = int(tied[0])
        new_var = float(var_new[np.searchsorted(cand, pick)])
        if new_var > cfg.K:
            break
        x = arr.coords[pick]
        sse += m / (m + 1) * float(((x - mu) ** 2).sum())
        mu = mu + (x - mu) / (m + 1)
        avail[pick] = False
        cover(arr.slots[pick])
        order.append(pick)
        v.append(new_var)

    return VarianceTrace(tuple(arr.keys[p] for p in order), tuple(v))


def _smoothed_derivatives(trace: VarianceTrace, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # the seed distance is in other units than the embedding variances
    x = np.asarray(trace.v[1:], dtype=float)
    # point-symmetric extension keeps the end slopes, so the kernel does not
    # flatten the curve at either boundary
    r = min(int(4.0 * sigma + 0.5), len(x) - 1)
    padded = np.pad(x, r, mode="reflect", reflect_type="odd")
    s = gaussian_filter1d(padded, sigma, mode="reflect", truncate=4.0)[r: r + len(x)]
    d1 = np.gradient(s)
    d2 = np.gradient(d1)
    return s, d1, d2


def knees(trace: VarianceTrace, sigma: float) -> list[tuple[int, float]]:
    """Upward bends of the trace as ``(index, rise)`` pairs.

    The trace (without the seed distance) is Gaussian-smoothed and
    differentiated twice by central differences. A bend starts at a local
    maximum of the positive second derivative, where the curve turns upward
    hardest, and ends at the following zero crossing, where the slope peaks;
    the slope there is the bend's rise. A bend whose slope is still growing
    at the end of the trace has no rise yet and is dropped.

    Smoothing moves the second-derivative peak of a jump up to ``sigma``
    samples early, so the cut is placed on the raw trace: the last entry
    before the largest single increase inside the bend (ties to the
    earliest). ``index`` addresses ``trace.v``, so ``trace.prefix(index)``
    is the cluster the bend closes.
    """
    if len(trace.v) < 3:
        raise TraceTooShort(f"trace has {len(trace.v)} entries, need 3")
    x = np.asarray(trace.v[1:], dtype=float)
    _, d1, d2 = _smoothed_derivatives(trace, sigma)
    top = np.abs(d2).max()
    if top == 0:
        return []
    tol = PEAK_RTOL * top
    inc = np.diff(x)
    n = len(d2)
    out = []
    for k in range(1, n - 1):
        # strict rise into k, plateaus resolve to their first sample
        if not (d2[k] > tol and d2[k] > d2[k - 1] + tol and d2[k] >= d2[k + 1] - tol):
            continue
        m = k + 1
        while m < n and d2[m] > tol:
            m += 1
        if m >= n - 1:
            continue
        lo = k - 1
        step = inc[lo:m]
        big = step.max()
        cut = lo + int(np.flatnonzero(step >= big - VAR_ATOL - VAR_RTOL * abs(big))[0])
        out.append((cut + 1, float(d1[m - 1: m + 1].max())))
    return out


def detect_cut(trace: VarianceTrace, sigma: float, T: float) -> list[int]:
    """Indices of the bends whose rise exceeds ``T``, ascending."""
    return [k for k, rise in knees(trace, sigma) if rise > T]


# (candidate nodes, current pool) -> (silhouette, combined score)
Scorer = Callable[[tuple[NodeKey, ...], frozenset[NodeKey]], tuple[float, float]]


class MiningCache:
    """Memo of growth traces and candidate scores.

    Neither depends on the threshold, so a sweep that re-mines the same grid
    at many thresholds reuses every run whose pool state has been seen.
    """

    def __init__(self):
        self.traces: dict = {}
        self.scores: dict = {}
        self.embeddings: dict = {}


def mine(
    grid: NodeGrid,
    D: DistanceMatrix,
    embedding: Embedding,
    cfg: MinerConfig,
    scorer: Scorer | None = None,
    T: float | None = None,
    cache: MiningCache | None = None,
) -> PatternSet:
    """Extract patterns until no seed pair is left.

    ``T`` overrides ``cfg.T``; one of them must be set. A cut candidate is a
    bend whose rise exceeds the threshold and whose prefix has a silhouette of
    at least ``cfg.min_silhouette`` against the rest of the pool; the
    candidate with the highest combined score wins (ties to the earliest
    cut). A trace without any upward bend is taken whole, subject to the same
    silhouette floor. If the trace bends but no candidate is admissible,
    mining stops: seeds come out tightest first, so later ones are looser
    still. A cluster failing the silhouette floor or the node/day gates is
    dropped and its seed pair is never used again.
    """
    T = cfg.T if T is None else T
    if T is None:
        raise ValueError("mine needs a threshold; use sweep_threshold to pick one")
    if scorer is None:
        from .scoring import CandidateScorer

        scorer = CandidateScorer(grid, D, cfg.frq)
    cache = cache if cache is not None else MiningCache()
    arr = _Arrays(grid, embedding, D)
    pos = D.index()

    excluded: set[NodeKey] = set()
    banned: set[tuple[NodeKey, NodeKey]] = set()
    patterns: list[Pattern] = []
    while cfg.max_patterns is None or len(patterns) < cfg.max_patterns:
        try:
            seed = find_seed(grid, D, excluded, banned)
        except NoSeed:
            break
        frozen = frozenset(excluded)
        key = (seed, frozen)
        trace = cache.traces.get(key)
        if trace is None:
            if cfg.reembed and excluded:
                sub = cache.embeddings.get(frozen)
                if sub is None:
                    keep = [k for k in D.node_ids if k not in frozen]
                    idx = np.array([pos[k] for k in keep])
                    sub_D = DistanceMatrix(tuple(keep), D.values[np.ix_(idx, idx)])
                    sub = _Arrays(grid, embed(sub_D, min(cfg.dim, len(keep))), D)
                    cache.embeddings[frozen] = sub
            else:
                sub = arr
            trace = grow(seed, grid, embedding, cfg, excluded, D, _arrays=sub)
            cache.traces[key] = trace
        try:
            bends = knees(trace, cfg.sigma)
        except TraceTooShort:
            bends = []
        cands = [k for k, rise in bends if rise > T]

        pool = frozenset(grid.nodes) - frozen

        def score(k):
            sk = (key, k)
            if sk not in cache.scores:
                cache.scores[sk] = scorer(trace.prefix(k), pool)
            return cache.scores[sk]

        best_k, best_sc = None, -math.inf
        for k in cands:
            sl, sc = score(k)
            if sl >= cfg.min_silhouette and sc > best_sc:
                best_k, best_sc = k, sc

        if best_k is not None:
            cut = best_k
        elif bends:
            # the tightest remaining seed yields no admissible cut
            break
        else:
            cut = len(trace.v) - 1
            if score(cut)[0] < cfg.min_silhouette:
                banned.add(seed)
                continue
        nodes = trace.prefix(cut)

        if len(nodes) >= cfg.min_pattern_nodes and len({i for i, _ in nodes}) >= cfg.min_pattern_days:
            scene, activity, objects = summarise_labels(grid, nodes)
            patterns.append(Pattern(
                id=len(patterns) + 1,
                nodes=frozenset(nodes),
                seed=seed,
                threshold_used=T,
                cut_index=cut,
                scene=scene,
                activity=activity,
                objects=objects,
            ))
            excluded.update(nodes)
        else:
            banned.add(seed)

    params = {
        "T": T,
        "sigma": cfg.sigma,
        "K": None if math.isinf(cfg.K) else cfg.K,
        "min_pattern_nodes": cfg.min_pattern_nodes,
        "min_pattern_days": cfg.min_pattern_days,
        "min_silhouette": cfg.min_silhouette,
        "reembed": cfg.reembed,
    }
    return PatternSet(tuple(patterns), frozenset(grid.nodes) - excluded, params=params)


def with_threshold(cfg: MinerConfig, T: float | None) -> MinerConfig:
    return replace(cfg, T=T)
