"""Greedy inclusion-circle clustering.

Every alive node is the center of a closed disc of radius ``r_cl``. The node
whose disc covers the most alive nodes becomes the next head (ties go to the
lowest id); it and everything in its disc leave the alive set. Repeat until
nothing is left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Cluster:
    head: int
    members: tuple = ()

    @property
    def nodes(self):
        return (self.head,) + tuple(self.members)


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple
    r_cl: float = 10.0
    # inclusion count of each head at the moment it was selected
    counts: tuple = field(default=(), compare=False)

    @property
    def heads(self):
        return [c.head for c in self.clusters]

    def __len__(self):
        return len(self.clusters)

    def head_of(self) -> dict:
        """Map node id -> id of the head of its cluster."""
        out = {}
        for c in self.clusters:
            for n in c.nodes:
                out[n] = c.head
        return out

    def to_dict(self) -> dict:
        return {
            "r_cl": self.r_cl,
            "clusters": [{"head": c.head, "members": list(c.members)} for c in self.clusters],
        }


def _within(positions: np.ndarray, radius: float) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1]) <= radius


def inclusion_count(scenario, center: int, radius: float, alive) -> int:
    """Number of alive nodes within ``radius`` of ``center``, center included."""
    alive = set(alive)
    if center not in alive:
        raise ValueError(f"center node {center} is not alive")
    pos = scenario.positions
    cx, cy = pos[center]
    return sum(1 for n in alive if np.hypot(pos[n, 0] - cx, pos[n, 1] - cy) <= radius)


def cluster_nodes(scenario, r_cl: float = 10.0) -> ClusterSet:
    pos = np.asarray(scenario.positions)
    n = len(pos)
    cover = _within(pos, r_cl)
    alive = np.ones(n, dtype=bool)
    clusters, counts = [], []
    while alive.any():
        cnt = np.where(alive, cover[:, alive].sum(axis=1), -1)
        head = int(np.argmax(cnt))  # argmax returns the first maximum -> lowest id
        members = np.flatnonzero(cover[head] & alive)
        clusters.append(Cluster(head, tuple(int(m) for m in members if m != head)))
        counts.append(int(cnt[head]))
        alive[members] = False
    return ClusterSet(tuple(clusters), float(r_cl), tuple(counts))
