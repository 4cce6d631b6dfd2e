"""Significance-weighted graph over lists.

Two lists are linked by the improbability of their member overlap: the edge
weight is the negative base-10 log of the hypergeometric tail probability of
seeing at least the observed intersection between samples of the two list
sizes drawn from the ``n``-user universe.  All tail sums run in log space
(log-gamma for the binomials, streaming log-add for the sum over the upper
tail), so weights stay finite and accurate far past the point where the
probability itself underflows a double.

Candidate pairs are enumerated through shared users, never over all l^2
list pairs.  Lists whose every edge falls below the ``rho`` cutoff remain in
the graph as isolated nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .corpus import MembershipCorpus
from .errors import ParseError, ValidationError

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class GraphBuildConfig:
    rho: float = 6.0

    def __post_init__(self):
        if not (self.rho >= 0.0):
            raise ValidationError("rho must be >= 0")


@dataclass
class ListGraph:
    """Weighted undirected graph; edge keys are lexicographically ordered pairs.

    Treated as immutable once built.
    """

    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], float]

    def edge_count(self) -> int:
        return len(self.edges)

    def weight(self, a: str, b: str) -> float:
        return self.edges.get((a, b) if a <= b else (b, a), 0.0)

    def degrees(self) -> dict[str, int]:
        deg = {node: 0 for node in self.nodes}
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg


def _check_overlap_args(size_x: int, size_y: int, intersection: int, n: int) -> None:
    if n < 1:
        raise ValidationError("universe size n must be >= 1")
    if size_x < 0 or size_y < 0:
        raise ValidationError("list sizes must be nonnegative")
    if size_x > n or size_y > n:
        raise ValidationError("list sizes cannot exceed the universe size")
    if not (0 <= intersection <= min(size_x, size_y)):
        raise ValidationError(
            f"impossible overlap: {intersection} not in [0, min({size_x}, {size_y})]"
        )


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _log_add(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def _log_tail(size_x: int, size_y: int, intersection: int, n: int) -> float:
    """Natural log of P(overlap >= intersection) under the hypergeometric null.

    Sums the upper tail directly, which is shorter and better conditioned
    than one-minus-the-lower-tail when the intersection is large.
    """
    if intersection == 0:
        return 0.0
    lo = max(intersection, size_x + size_y - n)
    hi = min(size_x, size_y)
    base = _log_comb(n, size_y)
    acc = -math.inf
    for j in range(lo, hi + 1):
        term = _log_comb(size_x, j) + _log_comb(n - size_x, size_y - j) - base
        acc = term if acc == -math.inf else _log_add(acc, term)
    return min(acc, 0.0)


def overlap_pvalue(size_x: int, size_y: int, intersection: int, n: int) -> float:
    """Probability of an overlap at least this large between random lists.

    Symmetric in the two sizes; 1.0 for a zero intersection.  May underflow
    to 0.0 for overlaps whose tail probability is below the double range;
    use :func:`overlap_lpv` when the magnitude matters.
    """
    _check_overlap_args(size_x, size_y, intersection, n)
    return math.exp(_log_tail(size_x, size_y, intersection, n))


def overlap_lpv(size_x: int, size_y: int, intersection: int, n: int) -> float:
    """Negative log10 of :func:`overlap_pvalue`, computed entirely in log space."""
    _check_overlap_args(size_x, size_y, intersection, n)
    return -_log_tail(size_x, size_y, intersection, n) / _LN10


def _log_tail_batch(
    sx: np.ndarray, sy: np.ndarray, k: np.ndarray, n: int, lg: np.ndarray
) -> np.ndarray:
    """Vectorised `_log_tail` over parallel arrays; ``lg[i] = lgamma(i)``."""

    def log_comb(a, b):
        return lg[a + 1] - lg[b + 1] - lg[a - b + 1]

    lo = np.maximum(k, sx + sy - n)
    hi = np.minimum(sx, sy)
    base = log_comb(n, sy)
    acc = np.full(sx.shape, -np.inf)
    out = np.zeros(sx.shape)
    max_terms = int(np.max(hi - lo)) + 1 if len(sx) else 0
    for t in range(max_terms):
        j = lo + t
        live = j <= hi
        if not live.any():
            break
        jl = j[live]
        term = (log_comb(sx[live], jl)
                + log_comb((n - sx)[live], sy[live] - jl)
                - base[live])
        acc[live] = np.logaddexp(acc[live], term)
    nonzero = k > 0
    out[nonzero] = np.minimum(acc[nonzero], 0.0)
    return out


def _intersection_counts(
    corpus: MembershipCorpus, index: dict[str, int], l: int
) -> tuple[np.ndarray, np.ndarray]:
    """Shared-user pair enumeration: returns (pair keys ``i*l+j`` with i<j,
    intersection sizes), reduced deterministically."""
    chunks: list[tuple[np.ndarray, np.ndarray]] = []
    buf: list[np.ndarray] = []
    buf_n = 0
    triu_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def flush():
        nonlocal buf, buf_n
        if not buf:
            return
        keys, counts = np.unique(np.concatenate(buf), return_counts=True)
        chunks.append((keys, counts))
        buf = []
        buf_n = 0

    for uid in sorted(corpus.user_index):
        lids = corpus.user_index[uid]
        d = len(lids)
        if d < 2:
            continue
        idx = np.sort(np.fromiter((index[x] for x in lids), dtype=np.int64, count=d))
        if d <= 512:
            pair = triu_cache.get(d)
            if pair is None:
                pair = np.triu_indices(d, 1)
                triu_cache[d] = pair
        else:
            pair = np.triu_indices(d, 1)
        buf.append(idx[pair[0]] * l + idx[pair[1]])
        buf_n += len(pair[0])
        if buf_n >= 4_000_000:
            flush()
    flush()
    if not chunks:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    all_keys = np.concatenate([c[0] for c in chunks])
    all_counts = np.concatenate([c[1] for c in chunks])
    keys, inv = np.unique(all_keys, return_inverse=True)
    counts = np.bincount(inv, weights=all_counts.astype(np.float64))
    return keys, counts.astype(np.int64)


def build_list_graph(corpus: MembershipCorpus, config: GraphBuildConfig) -> ListGraph:
    """One node per list; edges for every member-sharing pair whose weight
    clears ``config.rho``."""
    nodes = tuple(sorted(corpus.memberships))
    if not nodes:
        raise ValidationError("corpus has no lists")
    index = {lid: i for i, lid in enumerate(nodes)}
    sizes = np.fromiter((len(corpus.memberships[lid]) for lid in nodes),
                        dtype=np.int64, count=len(nodes))
    n = corpus.n
    l = len(nodes)
    keys, counts = _intersection_counts(corpus, index, l)
    edges: dict[tuple[str, str], float] = {}
    if len(keys) == 0:
        return ListGraph(nodes=nodes, edges=edges)
    lg = np.zeros(n + 2)  # index 0 is never touched (log_comb args are >= 1)
    lg[1:] = [math.lgamma(i) for i in range(1, n + 2)]
    for start in range(0, len(keys), 1_000_000):
        kk = keys[start:start + 1_000_000]
        cc = counts[start:start + 1_000_000]
        i_idx = kk // l
        j_idx = kk % l
        lpv = -_log_tail_batch(sizes[i_idx], sizes[j_idx], cc, n, lg) / _LN10
        keep = lpv >= config.rho
        for i, j, w in zip(i_idx[keep].tolist(), j_idx[keep].tolist(),
                           lpv[keep].tolist()):
            edges[(nodes[i], nodes[j])] = w
    return ListGraph(nodes=nodes, edges=edges)


def save_graph(graph: ListGraph, edges_path, nodes_path) -> None:
    """Write edges (lexicographic pair order, weights to 6 decimals) and the
    sidecar node list that preserves isolated nodes."""
    with open(edges_path, "w", encoding="utf-8", newline="\n") as fh:
        for (a, b) in sorted(graph.edges):
            fh.write(f"{a}\t{b}\t{graph.edges[(a, b)]:.6f}\n")
    with open(nodes_path, "w", encoding="utf-8", newline="\n") as fh:
        for node in graph.nodes:
            fh.write(node + "\n")


def load_graph(edges_path, nodes_path) -> ListGraph:
    nodes: list[str] = []
    seen = set()
    with open(nodes_path, encoding="utf-8") as fh:
        for line in fh:
            node = line.rstrip("\n")
            if not node:
                continue
            if node in seen:
                raise ValidationError(f"{nodes_path}: duplicate node {node!r}")
            seen.add(node)
            nodes.append(node)
    edges: dict[tuple[str, str], float] = {}
    with open(edges_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ParseError(f"{edges_path}:{lineno}: expected three fields")
            a, b, w_str = fields
            try:
                w = float(w_str)
            except ValueError as exc:
                raise ParseError(f"{edges_path}:{lineno}: bad weight {w_str!r}") from exc
            if a not in seen or b not in seen:
                raise ValidationError(f"{edges_path}:{lineno}: endpoint not in node list")
            if a == b:
                raise ValidationError(f"{edges_path}:{lineno}: self-loop on {a!r}")
            key = (a, b) if a <= b else (b, a)
            if key in edges:
                raise ValidationError(f"{edges_path}:{lineno}: duplicate edge {key}")
            edges[key] = w
    return ListGraph(nodes=tuple(nodes), edges=edges)


def iter_adjacency(graph: ListGraph) -> Iterator[tuple[str, str, float]]:
    for (a, b), w in graph.edges.items():
        yield a, b, w
