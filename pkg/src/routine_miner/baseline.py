"""Density-based comparison pipeline.

Each node becomes a concept vector (one-hot scene and activity, unit-sum
object multi-hot) with its weighted time of day appended; the vectors are
clustered with DBSCAN and every cluster is reported as a pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import UnknownLabel
from .miner import Pattern, PatternSet, summarise_labels
from .model import NodeGrid, TimeSlotNode

NOISE = -1


@dataclass(frozen=True)
class BaselineConfig:
    eps: float = 0.5
    min_pts: int = 3
    time_weight: float = 1.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if self.time_weight < 0:
            raise ValueError("time_weight must be >= 0")


@dataclass(frozen=True)
class Vocab:
    scenes: tuple[str, ...]
    activities: tuple[str, ...]
    objects: tuple[str, ...]

    @classmethod
    def from_grid(cls, grid: NodeGrid) -> "Vocab":
        nodes = grid.ordered_nodes()
        return cls(
            tuple(sorted({n.scene for n in nodes})),
            tuple(sorted({n.activity for n in nodes})),
            tuple(sorted(set().union(*(n.objects for n in nodes)))),
        )

    @property
    def width(self) -> int:
        return len(self.scenes) + len(self.activities) + len(self.objects) + 1


def featurize(node: TimeSlotNode, vocab: Vocab, slots_per_day: int = 48, time_weight: float = 1.0) -> np.ndarray:
    def at(labels, lab, what):
        try:
            return labels.index(lab)
        except ValueError:
            raise UnknownLabel(f"{what} {lab!r} not in vocabulary") from None

    ns, na = len(vocab.scenes), len(vocab.activities)
    x = np.zeros(vocab.width)
    x[at(vocab.scenes, node.scene, "scene")] = 1.0
    x[ns + at(vocab.activities, node.activity, "activity")] = 1.0
    if node.objects:
        w = 1.0 / len(node.objects)
        for lab in node.objects:
            x[ns + na + at(vocab.objects, lab, "object")] = w
    x[-1] = time_weight * node.slot_index / slots_per_day
    return x


def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    """Cluster labels (0, 1, ...) or ``NOISE`` under Euclidean distance.

    A point is core when at least ``min_pts`` points, itself included, lie
    within ``eps``. Clusters are the connected components of the core points;
    a border point joins the cluster of its nearest core point, which makes
    the result independent of input order up to cluster renaming. Clusters
    are numbered by their lexicographically smallest member vector.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("dbscan needs at least one point")
    dist = cdist(X, X)
    adj = dist <= eps
    core = adj.sum(axis=1) >= min_pts

    labels = np.full(len(X), NOISE)
    core_idx = np.flatnonzero(core)
    if core_idx.size == 0:
        return labels
    _, comp = connected_components(adj[np.ix_(core_idx, core_idx)], directed=False)
    labels[core_idx] = comp

    for p in np.flatnonzero(~core):
        near = core_idx[adj[p, core_idx]]
        if near.size == 0:
            continue
        d = dist[p, near]
        tied = near[d == d.min()]
        if tied.size > 1:
            # equidistant cores: lexicographically smallest coordinates win
            tied = tied[np.lexsort(X[tied].T[::-1])]
        labels[p] = labels[tied[0]]

    # canonical numbering
    firsts = []
    for c in np.unique(labels[labels != NOISE]):
        members = np.flatnonzero(labels == c)
        firsts.append((tuple(X[members[np.lexsort(X[members].T[::-1])[0]]]), c))
    remap = {c: new for new, (_, c) in enumerate(sorted(firsts))}
    return np.array([remap[c] if c != NOISE else NOISE for c in labels])


def baseline_patterns(grid: NodeGrid, cfg: BaselineConfig | None = None) -> PatternSet:
    cfg = cfg or BaselineConfig()
    vocab = Vocab.from_grid(grid)
    keys = grid.keys()
    X = np.array([featurize(grid.nodes[k], vocab, grid.slots_per_day, cfg.time_weight) for k in keys])
    labels = dbscan(X, cfg.eps, cfg.min_pts)

    groups: dict[int, list] = {}
    for k, c in zip(keys, labels):
        if c != NOISE:
            groups.setdefault(int(c), []).append(k)
    # patterns numbered by their earliest node
    ordered = sorted(groups.values(), key=min)
    patterns = []
    for pid, nodes in enumerate(ordered, start=1):
        scene, activity, objects = summarise_labels(grid, nodes)
        first = sorted(nodes)
        seed = (first[0], first[1] if len(first) > 1 else first[0])
        patterns.append(Pattern(pid, frozenset(nodes), seed, None, -1, scene, activity, objects))
    assigned = {k for p in patterns for k in p.nodes}
    params = {"eps": cfg.eps, "min_pts": cfg.min_pts, "time_weight": cfg.time_weight}
    return PatternSet(tuple(patterns), frozenset(keys) - assigned, method="dbscan-baseline", params=params)
