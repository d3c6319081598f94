"""Connectivity clusters of a state ensemble and maximal span detection.

Two states are linked when their distance is <= the threshold; clusters are
the connected components of that graph. The span of a cluster is its largest
intra-cluster distance, and a cluster spans maximally when the span comes
within ``epsilon`` of pi/2.

Cluster ids are canonical: clusters are numbered 0, 1, ... in order of their
smallest member index, so partitions from different algorithms compare equal
label for label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidThresholdError
from .metric import HALF_PI, DistanceMatrix


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.n_sets = n

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; return False if already joined."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        self.n_sets -= 1
        return True

    def roots(self) -> list[int]:
        return [self.find(x) for x in range(len(self.parent))]


@dataclass(frozen=True, eq=False)
class ClusterPartition:
    threshold: float
    labels: np.ndarray
    spans: np.ndarray
    span_witness: tuple[tuple[int, int], ...]

    @property
    def cluster_count(self) -> int:
        return len(self.spans)

    @property
    def n_states(self) -> int:
        return len(self.labels)

    def members(self, cluster_id: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.labels == cluster_id)]

    def as_sets(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(self.members(c)) for c in range(self.cluster_count))

    def to_dict(self, epsilon: float | None = None) -> dict:
        return {
            "threshold": float(self.threshold),
            "epsilon": None if epsilon is None else float(epsilon),
            "clusters": [
                {
                    "id": c,
                    "members": self.members(c),
                    "span": float(self.spans[c]),
                    "witness": list(self.span_witness[c]),
                }
                for c in range(self.cluster_count)
            ],
        }

    def to_json(self, epsilon: float | None = None) -> str:
        return json.dumps(self.to_dict(epsilon), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> ClusterPartition:
        clusters = sorted(data["clusters"], key=lambda c: c["id"])
        n = sum(len(c["members"]) for c in clusters)
        labels = np.full(n, -1, dtype=np.int64)
        for c in clusters:
            labels[c["members"]] = c["id"]
        return cls(
            float(data["threshold"]),
            labels,
            np.array([c["span"] for c in clusters], dtype=np.float64),
            tuple(tuple(c["witness"]) for c in clusters),
        )


def _check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold <= HALF_PI:
        raise InvalidThresholdError(f"threshold must lie in [0, pi/2], got {threshold!r}")


def _canonical_labels(keys) -> np.ndarray:
    """Relabel arbitrary per-state keys by order of first appearance."""
    mapping: dict = {}
    out = np.empty(len(keys), dtype=np.int64)
    for i, k in enumerate(keys):
        out[i] = mapping.setdefault(k, len(mapping))
    return out


def _spans(dm: DistanceMatrix, labels: np.ndarray, n_clusters: int):
    sq = dm.square
    spans = np.zeros(n_clusters)
    witness = []
    for c in range(n_clusters):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            witness.append((int(idx[0]), int(idx[0])))
            continue
        block = sq[np.ix_(idx, idx)]
        flat = int(np.argmax(block))
        i, j = divmod(flat, idx.size)
        spans[c] = block[i, j]
        witness.append((int(idx[i]), int(idx[j])))
    return spans, tuple(witness)


def build_clusters(dm: DistanceMatrix, threshold: float) -> ClusterPartition:
    """Union-find clustering of all pairs with distance <= threshold."""
    _check_threshold(threshold)
    M = dm.size
    uf = UnionFind(M)
    rows, cols = dm.pair_indices
    linked = np.flatnonzero(dm.entries <= threshold)
    for m, n in zip(rows[linked].tolist(), cols[linked].tolist()):
        uf.union(m, n)
        if uf.n_sets == 1:
            break
    labels = _canonical_labels(uf.roots())
    spans, witness = _spans(dm, labels, uf.n_sets)
    return ClusterPartition(float(threshold), labels, spans, witness)


def oracle_boolean_clusters(dm: DistanceMatrix, threshold: float) -> ClusterPartition:
    """Boolean-list clustering, kept as a brute-force reference (O(M^3)).

    ``b[m, l]`` is True when l is known to share a cluster with m. For every
    linked pair (m, n) rows m and n are OR-ed together; the sweep over all
    pairs is repeated until nothing changes, so each row ends up equal to the
    full cluster of its state. Duplicate columns are then cleared so every
    cluster is listed once, and each surviving column is one cluster list.
    """
    _check_threshold(threshold)
    M = dm.size
    d = dm.square
    b = [[False] * M for _ in range(M)]

    changed = True
    while changed:
        changed = False
        for m in range(M):
            for n in range(M):
                if d[m, n] <= threshold:
                    if not b[m][n]:
                        b[m][n] = True
                        changed = True
                    bm, bn = b[m], b[n]
                    for l in range(M):
                        v = bm[l] or bn[l]
                        if v != bm[l] or v != bn[l]:
                            changed = True
                        bm[l] = bn[l] = v

    columns = [tuple(b[m][n] for m in range(M)) for n in range(M)]
    for n in range(M):
        for k in range(n):
            if any(columns[k]) and columns[k] == columns[n]:
                columns[n] = (False,) * M
                break

    cluster_lists = [[m for m in range(M) if col[m]] for col in columns if any(col)]

    owner = [-1] * M
    for alpha, members in enumerate(cluster_lists):
        for m in members:
            if owner[m] != -1:
                raise AssertionError(f"state {m} listed in two clusters")
            owner[m] = alpha
    if -1 in owner:
        raise AssertionError("some state belongs to no cluster")
    labels = _canonical_labels(owner)

    spans = np.zeros(len(cluster_lists))
    witness: list[tuple[int, int]] = [(-1, -1)] * len(cluster_lists)
    for c in range(len(cluster_lists)):
        members = [m for m in range(M) if labels[m] == c]
        best, pair = -1.0, (members[0], members[0])
        for i in members:
            for j in members:
                if d[i, j] > best:
                    best, pair = d[i, j], (i, j)
        spans[c] = best
        witness[c] = (min(pair), max(pair))
    return ClusterPartition(float(threshold), labels, spans, tuple(witness))


@dataclass(frozen=True)
class MscReport:
    has_msc: bool
    msc_cluster_id: int | None
    epsilon: float
    achieved_span: float | None
    witness: tuple[int, int] | None = None


def detect_msc(partition: ClusterPartition, epsilon: float) -> MscReport:
    """Find a cluster with pi/2 - span <= epsilon.

    When several qualify, the one with the largest span wins; ties go to the
    smallest cluster id.
    """
    if epsilon < 0:
        raise InvalidArgumentError(f"epsilon must be >= 0, got {epsilon!r}")
    spans = partition.spans
    ok = np.flatnonzero(HALF_PI - spans <= epsilon)
    if ok.size == 0:
        return MscReport(False, None, float(epsilon), None)
    # argmax returns the first maximum, i.e. the smallest id among ties
    best = int(ok[np.argmax(spans[ok])])
    return MscReport(True, best, float(epsilon), float(spans[best]), partition.span_witness[best])
