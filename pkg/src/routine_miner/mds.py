"""Classical (Torgerson) multidimensional scaling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .distance import DistanceMatrix
from .errors import TooFewNodes
from .model import NodeKey


@dataclass(frozen=True)
class Embedding:
    node_ids: tuple[NodeKey, ...]
    coords: np.ndarray
    # raw (unclamped) eigenvalues of the retained axes, largest first
    eigenvalues: np.ndarray
    # total magnitude of negative eigenvalues discarded by clamping
    clamped_mass: float = 0.0

    def index(self) -> dict[NodeKey, int]:
        return {k: p for p, k in enumerate(self.node_ids)}

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        axes = ["x", "y"] if self.coords.shape[1] == 2 else [f"x{a}" for a in range(self.coords.shape[1])]
        w.writerow(["day_index", "slot_index", *axes])
        for (i, j), row in zip(self.node_ids, self.coords):
            w.writerow([i, j, *(repr(float(x)) for x in row)])


def double_center(sq: np.ndarray) -> np.ndarray:
    """B = -1/2 J S J for a matrix of squared distances S."""
    row = sq.mean(axis=1, keepdims=True)
    col = sq.mean(axis=0, keepdims=True)
    return -0.5 * (sq - row - col + sq.mean())


def embed(D: DistanceMatrix, dim: int = 2) -> Embedding:
    """Embed the nodes of ``D`` in ``dim`` dimensions.

    Negative eigenvalues (non-Euclidean dissimilarities) are clamped to
    zero; their total magnitude is kept in ``clamped_mass``. Each axis is
    oriented so that its first non-negligible component is positive.
    """
    n = len(D)
    if n < 2:
        raise TooFewNodes(f"need at least 2 nodes, got {n}")
    if not 1 <= dim <= n:
        raise ValueError(f"dim must be in [1, {n}]")

    B = double_center(np.asarray(D.values, dtype=float) ** 2)
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]

    scale = max(abs(evals).max(), 1.0)
    neg = evals < 0
    clamped_mass = float(-evals[neg].sum())

    top_vals = evals[:dim].copy()
    top_vecs = evecs[:, :dim].copy()
    for a in range(dim):
        col = top_vecs[:, a]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            top_vecs[:, a] = -col

    coords = top_vecs * np.sqrt(np.clip(top_vals, 0.0, None))
    # a zero-eigenvalue axis can carry an arbitrary (non-centered) vector
    coords[:, top_vals <= 1e-12 * scale] = 0.0
    coords = coords - coords.mean(axis=0)
    return Embedding(D.node_ids, coords, top_vals, clamped_mass)
