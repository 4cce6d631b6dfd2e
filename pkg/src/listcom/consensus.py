"""Ensemble aggregation: consensus matrix, consensus graph, consensus cover.

A configured number of fast detector runs, each with a seed derived from the
master seed, vote on every node pair through the Jaccard similarity of the
community-label sets the run assigned to the two nodes.  Scores accumulate
per run into sparse maps and are reduced in ascending run order, so the
floating-point result is identical no matter how many workers executed the
runs.  The normalised matrix is thresholded into a consensus graph on which
a thorough detection pass produces the final cover.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from .detect import CommunitySet, DetectorConfig, detect, filter_singletons
from .errors import ParseError, ValidationError
from .listgraph import ListGraph
from .seeds import STREAM_CONSENSUS, derive_seed

Detector = Callable[[ListGraph, DetectorConfig], CommunitySet]


@dataclass
class ConsensusMatrix:
    """Sparse symmetric node-pair scores in (0, 1]; absent pair means 0.

    ``entries`` maps ``i * len(order) + j`` (i < j, canonical node indices)
    to the accumulated or normalised score.
    """

    order: tuple[str, ...]
    entries: dict[int, float]
    r: int
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._index = {node: i for i, node in enumerate(self.order)}

    def key(self, a: str, b: str) -> int:
        i, j = self._index[a], self._index[b]
        if i == j:
            raise ValidationError(f"no diagonal entries: {a!r}")
        if i > j:
            i, j = j, i
        return i * len(self.order) + j

    def get(self, a: str, b: str) -> float:
        return self.entries.get(self.key(a, b), 0.0)

    def items(self) -> Iterator[tuple[str, str, float]]:
        l = len(self.order)
        for k, v in self.entries.items():
            yield self.order[k // l], self.order[k % l], v


@dataclass(frozen=True)
class EnsembleConfig:
    runs: int = 100
    tau: float = 0.2
    master_seed: int = 0
    fast_config: DetectorConfig = field(default_factory=lambda: DetectorConfig(mode="fast"))
    thorough_config: DetectorConfig = field(default_factory=lambda: DetectorConfig(mode="thorough"))

    def __post_init__(self):
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if not (0.0 <= self.tau <= 1.0):
            raise ValidationError("tau must be in [0, 1]")

    @classmethod
    def from_master(
        cls,
        master_seed: int,
        runs: int = 100,
        tau: float = 0.2,
        fast_iterations: int | None = None,
        thorough_iterations: int | None = None,
        overlap_threshold: float = 0.3,
    ) -> "EnsembleConfig":
        """Wire all detector seeds from one master seed."""
        return cls(
            runs=runs,
            tau=tau,
            master_seed=master_seed,
            fast_config=DetectorConfig(
                mode="fast", iterations=fast_iterations,
                overlap_threshold=overlap_threshold),
            thorough_config=DetectorConfig(
                mode="thorough", iterations=thorough_iterations,
                overlap_threshold=overlap_threshold,
                seed=derive_seed(master_seed, STREAM_CONSENSUS)),
        )


def label_jaccard(labels_x, labels_y) -> float:
    """|X n Y| / |X u Y|; 0.0 when both sets are empty."""
    x = frozenset(labels_x)
    y = frozenset(labels_y)
    union = len(x | y)
    if union == 0:
        return 0.0
    return len(x & y) / union


def _pair_scores(
    base: CommunitySet, index: dict[str, int], l: int
) -> tuple[list[int], list[float]]:
    """One run's sparse map: unique co-assigned pair keys and Jaccard scores.

    Singleton communities are ignored.  Raises if a node is missing from the
    matrix order.
    """
    labels: dict[int, list[int]] = {}
    for cid, community in enumerate(base):
        if len(community) < 2:
            continue
        for node in community:
            i = index.get(node)
            if i is None:
                raise ValidationError(f"node {node!r} outside the matrix order")
            labels.setdefault(i, []).append(cid)
    if not labels:
        return [], []

    group_of: dict[int, int] = {}
    group_sets: list[frozenset[int]] = []
    group_key: dict[frozenset[int], int] = {}
    for i, lab in labels.items():
        fs = frozenset(lab)
        gid = group_key.get(fs)
        if gid is None:
            gid = len(group_sets)
            group_key[fs] = gid
            group_sets.append(fs)
        group_of[i] = gid

    key_arrays = []
    for cid, community in enumerate(base):
        if len(community) < 2:
            continue
        idx = np.sort(np.fromiter((index[node] for node in community),
                                  dtype=np.int64, count=len(community)))
        iu, ju = np.triu_indices(len(idx), 1)
        key_arrays.append(idx[iu] * l + idx[ju])
    keys = np.unique(np.concatenate(key_arrays))

    gids = np.full(l, -1, dtype=np.int64)
    for i, gid in group_of.items():
        gids[i] = gid
    g = len(group_sets)
    table = np.zeros((g, g))
    for a in range(g):
        for b in range(a, g):
            s = label_jaccard(group_sets[a], group_sets[b])
            table[a, b] = s
            table[b, a] = s
    scores = table[gids[keys // l], gids[keys % l]]
    nz = scores > 0.0
    return keys[nz].tolist(), scores[nz].tolist()


def accumulate(matrix: ConsensusMatrix, base: CommunitySet) -> ConsensusMatrix:
    """Add one base set's pairwise Jaccard scores into the matrix (in place)."""
    keys, scores = _pair_scores(base, matrix._index, len(matrix.order))
    entries = matrix.entries
    for k, s in zip(keys, scores):
        entries[k] = entries.get(k, 0.0) + s
    return matrix


def run_ensemble(
    graph: ListGraph,
    config: EnsembleConfig,
    workers: int = 1,
    detector: Detector = detect,
) -> ConsensusMatrix:
    """Aggregate ``config.runs`` fast detections into a normalised matrix.

    Run i uses seed ``derive_seed(master_seed, i)``; detections may execute
    on up to ``workers`` threads but are reduced in run order, so the result
    is independent of scheduling.
    """
    order = tuple(sorted(graph.nodes))
    matrix = ConsensusMatrix(order=order, entries={}, r=config.runs)

    def one_run(i: int) -> CommunitySet:
        cfg = config.fast_config.with_seed(derive_seed(config.master_seed, i))
        return filter_singletons(detector(graph, cfg))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for base in pool.map(one_run, range(config.runs)):
                accumulate(matrix, base)
    else:
        for i in range(config.runs):
            accumulate(matrix, one_run(i))

    inv_r = 1.0 / config.runs
    for k in matrix.entries:
        matrix.entries[k] *= inv_r
    return matrix


def consensus_graph(matrix: ConsensusMatrix, tau: float) -> ListGraph:
    """Graph over the matrix order keeping entries with score >= tau."""
    if not (0.0 <= tau <= 1.0):
        raise ValidationError("tau must be in [0, 1]")
    edges = {
        ((a, b) if a <= b else (b, a)): v
        for a, b, v in matrix.items()
        if v >= tau
    }
    return ListGraph(nodes=matrix.order, edges=edges)


def consensus_communities(matrix: ConsensusMatrix, config: EnsembleConfig,
                          detector: Detector = detect) -> CommunitySet:
    """Thorough detection on the tau-thresholded consensus graph."""
    graph = consensus_graph(matrix, config.tau)
    return filter_singletons(detector(graph, config.thorough_config))


def iterate_consensus(
    graph: ListGraph,
    config: EnsembleConfig,
    workers: int = 1,
    detector: Detector = detect,
    max_rounds: int = 20,
) -> tuple[ConsensusMatrix, CommunitySet]:
    """Optional fixed-point mode: re-run the ensemble on successive consensus
    graphs until the cover stops changing (or ``max_rounds`` is hit)."""
    from .seeds import STREAM_ITERATE

    matrix = run_ensemble(graph, config, workers=workers, detector=detector)
    cover = consensus_communities(matrix, config, detector=detector)
    for round_no in range(1, max_rounds):
        next_graph = consensus_graph(matrix, config.tau)
        round_cfg = replace(
            config,
            master_seed=derive_seed(config.master_seed, STREAM_ITERATE + round_no))
        next_matrix = run_ensemble(next_graph, round_cfg, workers=workers,
                                   detector=detector)
        next_cover = consensus_communities(next_matrix, round_cfg, detector=detector)
        matrix = next_matrix
        if next_cover.communities == cover.communities:
            return matrix, next_cover
        cover = next_cover
    return matrix, cover


def cover_agreement(a: CommunitySet, b: CommunitySet) -> float:
    """Symmetric best-match Jaccard agreement between two covers in [0, 1]."""
    if len(a) == 0 and len(b) == 0:
        return 1.0
    if len(a) == 0 or len(b) == 0:
        return 0.0

    def directed(src: CommunitySet, dst: CommunitySet) -> float:
        total = 0.0
        for c in src:
            total += max(label_jaccard(c, d) for d in dst)
        return total / len(src)

    return 0.5 * (directed(a, b) + directed(b, a))


def save_matrix(matrix: ConsensusMatrix, path) -> None:
    """TSV rows ``a<TAB>b<TAB>score`` (6 decimals, lexicographic pairs) under
    a ``#r=<runs>`` header."""
    rows = sorted((a, b, v) if a <= b else (b, a, v) for a, b, v in matrix.items())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#r={matrix.r}\n")
        for a, b, v in rows:
            fh.write(f"{a}\t{b}\t{v:.6f}\n")


def load_matrix(path, order: tuple[str, ...] | None = None) -> ConsensusMatrix:
    """Reload a matrix.  Pass the full node ``order`` (e.g. from the graph's
    sidecar node list) to preserve nodes that have no surviving entries;
    otherwise the order is reconstructed from the entry endpoints alone.
    Scores that rounded to 0.000000 on disk are dropped to keep the sparse
    absent-means-zero invariant."""
    raw: list[tuple[str, str, float]] = []
    r = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if lineno == 1:
                if not line.startswith("#r="):
                    raise ParseError(f"{path}:1: missing #r= header")
                try:
                    r = int(line[3:])
                except ValueError as exc:
                    raise ParseError(f"{path}:1: bad run count") from exc
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(f"{path}:{lineno}: expected three fields")
            try:
                v = float(fields[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad score {fields[2]!r}") from exc
            if v < 0.0 or v > 1.0 + 1e-9:
                raise ValidationError(f"{path}:{lineno}: score out of range")
            raw.append((fields[0], fields[1], v))
    if r is None:
        raise ParseError(f"{path}: empty file, missing header")
    if order is None:
        seen: set[str] = set()
        for a, b, _ in raw:
            seen.add(a)
            seen.add(b)
        order = tuple(sorted(seen))
    matrix = ConsensusMatrix(order=order, entries={}, r=r)
    for a, b, v in raw:
        if a not in matrix._index or b not in matrix._index:
            raise ValidationError(f"{path}: node outside the given order")
        if v > 0.0:
            matrix.entries[matrix.key(a, b)] = v
    return matrix
