"""Pattern quality scores and the threshold sweep.

The combined score of a pattern set is ``sc = sl + t_rpr``: the mean
silhouette of its clustering (on the semantic distance matrix) plus a
representativeness term rewarding patterns that recur on many days and
cover their time span densely.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Mapping, TextIO

import numpy as np

from .distance import DistanceMatrix
from .errors import NoPatterns, SingleCluster
from .mds import Embedding
from .miner import MinerConfig, MiningCache, PatternSet, mine
from .model import NodeGrid, NodeKey

# largest value the node distance can take
DMAX = 3.0


def _silhouette_values(M: np.ndarray, lab: np.ndarray) -> np.ndarray:
    """Per-point silhouette for a dense distance matrix and integer labels."""
    uniq, inv = np.unique(lab, return_inverse=True)
    onehot = np.zeros((len(lab), len(uniq)))
    onehot[np.arange(len(lab)), inv] = 1.0
    sums = M @ onehot
    sizes = onehot.sum(axis=0)
    rows = np.arange(len(lab))
    own = sizes[inv]

    a = np.zeros(len(lab))
    multi = own > 1
    a[multi] = sums[rows[multi], inv[multi]] / (own[multi] - 1)

    means = sums / sizes
    means[rows, inv] = np.inf
    b = means.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(len(lab))
    ok = multi & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return s


def silhouette(D: DistanceMatrix, labels: Mapping[NodeKey, int]) -> tuple[dict[NodeKey, float], float]:
    """Silhouette of each labelled node and their mean.

    Nodes missing from ``labels`` are ignored. A node alone in its cluster
    scores 0.
    """
    keys = [k for k in D.node_ids if k in labels]
    lab = np.array([labels[k] for k in keys])
    if len(set(lab.tolist())) < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    M = D.submatrix(keys)
    s = _silhouette_values(M, lab)
    return dict(zip(keys, s.tolist())), float(s.mean())


def pattern_representativeness(grid: NodeGrid, nodes, frq: float = 0.5) -> float:
    """Day coverage plus image density of one pattern.

    The image term divides the pattern's image count by the frames expected
    over its duration (per-day first-to-last image span, summed over days),
    with one hour of frames as the minimum denominator.
    """
    nodes = [grid.nodes[k] for k in nodes]
    if not nodes:
        raise NoPatterns("pattern has no nodes")
    by_day: dict[int, list] = {}
    for n in nodes:
        by_day.setdefault(n.day_index, []).append(n)
    span = sum(max(n.last_minute for n in ns) - min(n.first_minute for n in ns) for ns in by_day.values())
    images = sum(n.image_count for n in nodes)
    return len(by_day) / grid.n_days + images / max(60.0 * frq, span * frq)


def t_rpr(patterns: PatternSet, grid: NodeGrid, frq: float = 0.5) -> float:
    if not patterns.patterns:
        raise NoPatterns("representativeness of an empty pattern set")
    vals = [pattern_representativeness(grid, p.nodes, frq) for p in patterns.patterns]
    return float(sum(vals) / len(vals))


def sc(sl: float, t_rpr: float) -> float:
    return sl + t_rpr


class CandidateScorer:
    """Score of one candidate prefix against the rest of the current pool.

    Silhouettes come from the two-cluster labelling {candidate, pool -
    candidate} and are averaged over the candidate's own nodes, so the score
    describes the pattern rather than the leftover pool. A candidate covering
    the whole pool has nothing to be separated from; its nodes are then
    measured against the largest possible distance, s = (DMAX - a) / DMAX.
    """

    def __init__(self, grid: NodeGrid, D: DistanceMatrix, frq: float = 0.5):
        self.grid = grid
        self.D = D
        self.frq = frq
        self.pos = D.index()
        self._pool_key = None

    def _pool(self, pool: frozenset):
        if pool is not self._pool_key:
            idx = np.array(sorted(self.pos[k] for k in pool), dtype=int)
            self._pool_idx = idx
            self._pool_where = {p: r for r, p in enumerate(idx)}
            self._pool_rowsum = self.D.values[np.ix_(idx, idx)].sum(axis=1)
            self._pool_key = pool
        return self._pool_idx, self._pool_where, self._pool_rowsum

    def silhouette(self, nodes, pool: frozenset) -> float:
        idx, where, rowsum = self._pool(pool)
        p_idx = np.array([self.pos[k] for k in nodes], dtype=int)
        n_p = len(p_idx)
        n_r = len(idx) - n_p
        if n_r == 0:
            if n_p == 1:
                return 0.0
            a = self.D.values[np.ix_(p_idx, p_idx)].sum(axis=1) / (n_p - 1)
            return float(np.mean((DMAX - a) / DMAX))
        in_p = np.zeros(len(idx), dtype=bool)
        in_p[[where[p] for p in p_idx]] = True
        to_p = self.D.values[np.ix_(idx, p_idx)].sum(axis=1)
        to_r = rowsum - to_p

        a = np.where(in_p, to_p / max(n_p - 1, 1), to_r / max(n_r - 1, 1))
        b = np.where(in_p, to_r / n_r, to_p / n_p)
        single = np.where(in_p, n_p == 1, n_r == 1)
        denom = np.maximum(a, b)
        ok = ~single & (denom > 0)
        s = np.zeros(len(idx))
        s[ok] = (b[ok] - a[ok]) / denom[ok]
        return float(s[in_p].mean())

    def __call__(self, nodes, pool: frozenset) -> tuple[float, float]:
        sl = self.silhouette(nodes, pool)
        return sl, sc(sl, pattern_representativeness(self.grid, nodes, self.frq))


@dataclass
class ScoreReport:
    silhouette: float
    t_rpr: float
    sc: float
    silhouette_mode: str
    pattern_silhouette: dict[int, float] = field(default_factory=dict)
    pattern_vs_rest_silhouette: dict[int, float] = field(default_factory=dict)
    pattern_t_rpr: dict[int, float] = field(default_factory=dict)
    threshold: float | None = None
    sweep: list[tuple[float, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "silhouette": self.silhouette,
            "silhouette_mode": self.silhouette_mode,
            "t_rpr": self.t_rpr,
            "sc": self.sc,
            "threshold": self.threshold,
            "patterns": [
                {
                    "id": pid,
                    "silhouette": self.pattern_silhouette.get(pid),
                    "silhouette_vs_rest": self.pattern_vs_rest_silhouette.get(pid),
                    "t_rpr": self.pattern_t_rpr[pid],
                }
                for pid in sorted(self.pattern_t_rpr)
            ],
            "sweep": [{"T": t, "sc": s} for t, s in self.sweep],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def pattern_set_silhouette(ps: PatternSet, D: DistanceMatrix) -> tuple[float, str, dict[int, float]]:
    """Global silhouette of a pattern set.

    With two or more patterns every pattern is a cluster and unassigned nodes
    are left out. With one pattern the unassigned nodes form the second
    cluster; with nothing to compare against the silhouette is 0.
    """
    if len(ps.patterns) >= 2:
        per_node, mean = silhouette(D, ps.labels())
        per_pattern = {
            p.id: float(np.mean([per_node[k] for k in p.nodes])) for p in ps.patterns
        }
        return mean, "patterns", per_pattern
    if len(ps.patterns) == 1 and ps.unassigned:
        p = ps.patterns[0]
        labels = {k: 1 for k in p.nodes} | {k: 0 for k in ps.unassigned}
        per_node, mean = silhouette(D, labels)
        return mean, "pattern-vs-unassigned", {p.id: float(np.mean([per_node[k] for k in p.nodes]))}
    return 0.0, "undefined", {p.id: 0.0 for p in ps.patterns}


def score_patterns(ps: PatternSet, grid: NodeGrid, D: DistanceMatrix, frq: float = 0.5) -> ScoreReport:
    if not ps.patterns:
        return ScoreReport(0.0, 0.0, 0.0, "empty", threshold=ps.params.get("T"))
    sl, mode, per_pattern = pattern_set_silhouette(ps, D)
    per_trpr = {p.id: pattern_representativeness(grid, p.nodes, frq) for p in ps.patterns}
    rest_scorer = CandidateScorer(grid, D, frq)
    everything = frozenset(grid.nodes)
    vs_rest = {p.id: rest_scorer.silhouette(p.sorted_nodes(), everything) for p in ps.patterns}
    tr = t_rpr(ps, grid, frq)
    return ScoreReport(
        silhouette=sl,
        t_rpr=tr,
        sc=sc(sl, tr),
        silhouette_mode=mode,
        pattern_silhouette=per_pattern,
        pattern_vs_rest_silhouette=vs_rest,
        pattern_t_rpr=per_trpr,
        threshold=ps.params.get("T"),
    )


@dataclass
class SweepResult:
    best_T: float
    table: list[tuple[float, float]]
    patterns: PatternSet
    report: ScoreReport

    def __iter__(self):
        yield self.best_T
        yield self.table


def sweep_threshold(
    grid: NodeGrid,
    D: DistanceMatrix,
    embedding: Embedding,
    cfg: MinerConfig,
    range_: tuple[float, float] | None = None,
    step: float | None = None,
) -> SweepResult:
    """Mine at every threshold of the grid and keep the best-scoring one.

    Ties go to the smallest threshold.
    """
    lo, hi = range_ if range_ is not None else cfg.sweep_range
    step = cfg.sweep_step if step is None else step
    if not lo < hi or not step > 0:
        raise ValueError("sweep needs lo < hi and step > 0")
    values = MinerConfig(sweep_range=(lo, hi), sweep_step=step).sweep_values()

    cache = MiningCache()
    scorer = CandidateScorer(grid, D, cfg.frq)
    table = []
    best = None
    for T in values:
        ps = mine(grid, D, embedding, cfg, scorer=scorer, T=T, cache=cache)
        rep = score_patterns(ps, grid, D, cfg.frq)
        table.append((T, rep.sc))
        if best is None or rep.sc > best[1].sc:
            best = (ps, rep)
    ps, rep = best
    rep.sweep = table
    return SweepResult(rep.threshold, table, ps, rep)


def write_sweep_csv(table, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["T", "sc"])
    for t, s in table:
        w.writerow([repr(float(t)), repr(float(s))])
