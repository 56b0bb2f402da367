"""Semantic distance between time-slot nodes.

d(a, b) = [scene_a != scene_b] + [activity_a != activity_b] + jaccard(O_a, O_b)

Each term lies in [0, 1], so d lies in [0, 3]. There is no time term: two
nodes at different hours with the same labels are at distance 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import TooFewNodes
from .model import NodeGrid, NodeKey, TimeSlotNode


def jaccard_distance(a: frozenset | set, b: frozenset | set) -> float:
    # two empty sets are identical, so their distance is 0
    union = len(a | b)
    if union == 0:
        return 0.0
    return 1.0 - len(a & b) / union


def node_distance(a: TimeSlotNode, b: TimeSlotNode) -> float:
    return (
        float(a.scene != b.scene)
        + float(a.activity != b.activity)
        + jaccard_distance(a.objects, b.objects)
    )


@dataclass(frozen=True)
class DistanceMatrix:
    node_ids: tuple[NodeKey, ...]
    values: np.ndarray

    def __post_init__(self):
        n = len(self.node_ids)
        if self.values.shape != (n, n):
            raise ValueError("matrix shape does not match node_ids")

    def __len__(self) -> int:
        return len(self.node_ids)

    def index(self) -> dict[NodeKey, int]:
        return {k: p for p, k in enumerate(self.node_ids)}

    def submatrix(self, keys) -> np.ndarray:
        pos = self.index()
        idx = np.array([pos[k] for k in keys], dtype=int)
        return self.values[np.ix_(idx, idx)]

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        labels = [f"{i}:{j}" for i, j in self.node_ids]
        w.writerow(["node", *labels])
        for lab, row in zip(labels, self.values):
            w.writerow([lab, *(repr(float(x)) for x in row)])


def _codes(labels: list[str]) -> np.ndarray:
    vocab = {lab: c for c, lab in enumerate(sorted(set(labels)))}
    return np.array([vocab[lab] for lab in labels])


def distance_matrix(grid: NodeGrid) -> DistanceMatrix:
    """All-pairs node distances, rows ordered by (day_index, slot_index)."""
    nodes = grid.ordered_nodes()
    n = len(nodes)
    if n < 2:
        raise TooFewNodes(f"need at least 2 nodes, grid has {n}")

    scene = _codes([x.scene for x in nodes])
    act = _codes([x.activity for x in nodes])
    vocab = sorted(set().union(*(x.objects for x in nodes)))
    col = {lab: c for c, lab in enumerate(vocab)}
    member = np.zeros((n, len(vocab)))
    for r, x in enumerate(nodes):
        for lab in x.objects:
            member[r, col[lab]] = 1.0

    inter = member @ member.T
    size = member.sum(axis=1)
    union = size[:, None] + size[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        jac = np.where(union > 0, 1.0 - inter / np.where(union > 0, union, 1.0), 0.0)

    values = (
        (scene[:, None] != scene[None, :]).astype(float)
        + (act[:, None] != act[None, :]).astype(float)
        + jac
    )
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(tuple(x.key for x in nodes), values)
