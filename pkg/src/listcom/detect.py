"""Stochastic overlapping community detection on weighted graphs.

The built-in detector is a speaker-listener label propagation: every node
keeps a growing memory of labels, seeded with its own id.  Each iteration
visits nodes in a seed-driven random order; the visited node collects one
label from each neighbour (sampled in proportion to that label's frequency
in the neighbour's memory), tallies the collected labels weighted by edge
weight, and appends the winning label to its own memory.  After the final
iteration a node belongs to every community whose label holds at least
``overlap_threshold`` of its memory, and always to its single most frequent
label, so every non-isolated node lands in at least one community before
singleton filtering.  Ties always go to the lowest label id, which keeps a
run a pure function of (graph, config).

Anything callable as ``(graph, config) -> CommunitySet`` can stand in for
:func:`detect` in the ensemble driver, so a heavier external detector can be
slotted in without touching the aggregation machinery.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import ValidationError
from .listgraph import ListGraph

FAST_ITERATIONS = 5
THOROUGH_ITERATIONS = 50


@dataclass(frozen=True)
class DetectorConfig:
    mode: str = "fast"
    iterations: int | None = None
    overlap_threshold: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("fast", "thorough"):
            raise ValidationError(f"unknown detector mode {self.mode!r}")
        if self.iterations is not None and self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if not (0.0 < self.overlap_threshold < 1.0):
            raise ValidationError("overlap_threshold must be in (0, 1)")

    @property
    def resolved_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return FAST_ITERATIONS if self.mode == "fast" else THOROUGH_ITERATIONS

    def with_seed(self, seed: int) -> "DetectorConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class CommunitySet:
    """An overlapping cover: a canonically ordered tuple of member sets.

    Duplicate member sets collapse; order is (size desc, members lex asc).
    """

    communities: tuple[frozenset[str], ...]

    @classmethod
    def from_sets(cls, sets) -> "CommunitySet":
        uniq = {frozenset(s) for s in sets}
        ordered = sorted(uniq, key=lambda c: (-len(c), tuple(sorted(c))))
        return cls(tuple(ordered))

    def __iter__(self) -> Iterator[frozenset[str]]:
        return iter(self.communities)

    def __len__(self) -> int:
        return len(self.communities)

    def nodes(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.communities:
            out |= c
        return frozenset(out)


def detect(graph: ListGraph, config: DetectorConfig) -> CommunitySet:
    """Run label propagation; returns non-singleton communities only.

    Deterministic given (graph, config): node order, label ids, and the RNG
    stream are all derived from the canonical sort of node ids plus the seed.
    Isolated nodes are never assigned.
    """
    nodes = sorted(graph.nodes)
    if not nodes:
        raise ValidationError("graph has no nodes")
    index = {node: i for i, node in enumerate(nodes)}
    n = len(nodes)

    # CSR adjacency in canonical edge order
    deg = np.zeros(n, dtype=np.int64)
    edge_items = sorted((index[a], index[b], w) for (a, b), w in graph.edges.items())
    for i, j, _ in edge_items:
        deg[i] += 1
        deg[j] += 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=offsets[1:])
    nbr = np.zeros(offsets[-1], dtype=np.int64)
    wgt = np.zeros(offsets[-1], dtype=np.float64)
    fill = offsets[:-1].copy()
    for i, j, w in edge_items:
        nbr[fill[i]] = j
        wgt[fill[i]] = w
        fill[i] += 1
        nbr[fill[j]] = i
        wgt[fill[j]] = w
        fill[j] += 1

    active = np.flatnonzero(deg > 0)
    iterations = config.resolved_iterations
    mem = np.full((n, iterations + 1), -1, dtype=np.int64)
    mem[:, 0] = np.arange(n)
    mem_len = np.ones(n, dtype=np.int64)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    for _ in range(iterations):
        order = rng.permutation(len(active))
        for pos in order:
            u = int(active[pos])
            lo, hi = offsets[u], offsets[u + 1]
            nbrs = nbr[lo:hi]
            slots = rng.integers(0, mem_len[nbrs])
            labels = mem[nbrs, slots]
            uniq, inv = np.unique(labels, return_inverse=True)
            votes = np.bincount(inv, weights=wgt[lo:hi])
            winner = uniq[int(np.argmax(votes))]  # first max = lowest label id
            mem[u, mem_len[u]] = winner
            mem_len[u] += 1

    members: dict[int, set[str]] = {}
    memory_size = iterations + 1
    for u in active.tolist():
        uniq, counts = np.unique(mem[u, :memory_size], return_counts=True)
        keep = set(uniq[counts / memory_size >= config.overlap_threshold].tolist())
        keep.add(int(uniq[int(np.argmax(counts))]))
        for label in keep:
            members.setdefault(label, set()).add(nodes[u])

    return CommunitySet.from_sets(
        c for c in members.values() if len(c) >= 2
    )


def filter_singletons(cs: CommunitySet) -> CommunitySet:
    """Drop all size-1 communities."""
    return CommunitySet.from_sets(c for c in cs if len(c) >= 2)


def save_communities(cs: CommunitySet, path) -> None:
    """JSON array of arrays of node ids, in the canonical community order."""
    payload = [sorted(c) for c in cs]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_communities(path) -> CommunitySet:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list) or not all(isinstance(c, list) for c in payload):
        raise ValidationError(f"{path}: expected a JSON array of arrays")
    return CommunitySet.from_sets(frozenset(c) for c in payload)
