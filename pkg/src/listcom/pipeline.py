"""End-to-end orchestration with file-based stages.

Stages communicate only through artifacts in the output directory, so any
prefix of the pipeline can be resumed from disk with an identical final
result, and a one-shot run equals running the stages one by one.  Artifact
filenames are fixed:

    graph.tsv, graph.nodes, consensus.tsv, communities.json,
    stability.tsv, labels.json, users.json, eval.tsv

Configuration merges three layers with increasing precedence: built-in
defaults, a flat ``key = value`` config file, then explicit flags.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from . import consensus as cons
from . import corpus as corp
from . import labeling as lab
from . import listgraph as lg
from . import members as memb
from . import stability as stab
from .detect import load_communities, save_communities
from .errors import ParseError, StageError, ValidationError
from .seeds import STREAM_STABILITY, derive_seed

ARTIFACTS = {
    "graph": "graph.tsv",
    "nodes": "graph.nodes",
    "consensus": "consensus.tsv",
    "communities": "communities.json",
    "stability": "stability.tsv",
    "labels": "labels.json",
    "users": "users.json",
    "eval": "eval.tsv",
}


@dataclass(frozen=True)
class PipelineConfig:
    rho: float = 6.0
    runs: int = 100
    tau: float = 0.2
    mu: float = 0.1
    master_seed: int = 0
    workers: int = 1
    top_k: int = 3
    draws: int = 1000
    fast_iterations: int = 5
    thorough_iterations: int = 50
    overlap_threshold: float = 0.3
    stopwords: str | None = None
    iterate: bool = False

    def __post_init__(self):
        if self.rho < 0.0:
            raise ValidationError("rho must be >= 0")
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if not (0.0 <= self.tau <= 1.0):
            raise ValidationError("tau must be in [0, 1]")
        if not (0.0 <= self.mu <= 1.0):
            raise ValidationError("mu must be in [0, 1]")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if self.draws < 1:
            raise ValidationError("draws must be >= 1")
        if self.fast_iterations < 1 or self.thorough_iterations < 1:
            raise ValidationError("iteration counts must be >= 1")
        if not (0.0 < self.overlap_threshold < 1.0):
            raise ValidationError("overlap_threshold must be in (0, 1)")

    def ensemble_config(self) -> cons.EnsembleConfig:
        return cons.EnsembleConfig.from_master(
            self.master_seed,
            runs=self.runs,
            tau=self.tau,
            fast_iterations=self.fast_iterations,
            thorough_iterations=self.thorough_iterations,
            overlap_threshold=self.overlap_threshold,
        )

    def labeling_config(self) -> lab.LabelingConfig:
        stop = (lab.load_stopwords(self.stopwords) if self.stopwords
                else lab.default_stopwords())
        return lab.LabelingConfig(top_k=self.top_k, stopwords=stop)


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments allowed."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ParseError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return values


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def resolve_config(flag_values: dict[str, object] | None = None,
                   config_path=None) -> PipelineConfig:
    """Merge defaults < config file < flags into a validated PipelineConfig."""
    field_types = {f.name: f.type for f in fields(PipelineConfig)}
    merged: dict[str, object] = {}

    def coerce(name: str, raw: str) -> object:
        ftype = field_types[name]
        try:
            if ftype in ("int",):
                return int(raw)
            if ftype in ("float",):
                return float(raw)
            if ftype in ("bool",):
                low = raw.lower()
                if low in _BOOL_TRUE:
                    return True
                if low in _BOOL_FALSE:
                    return False
                raise ValueError(raw)
            return raw
        except ValueError as exc:
            raise ValidationError(f"config key {name!r}: bad value {raw!r}") from exc

    if config_path is not None:
        for key, raw in parse_config_file(config_path).items():
            if key not in field_types:
                raise ValidationError(f"unknown config key {key!r}")
            merged[key] = coerce(key, raw)
    for key, value in (flag_values or {}).items():
        if value is None:
            continue
        if key not in field_types:
            raise ValidationError(f"unknown config key {key!r}")
        merged[key] = value
    return PipelineConfig(**merged)


def _artifact(out_dir, name) -> Path:
    return Path(out_dir) / ARTIFACTS[name]


def _require(out_dir, name) -> Path:
    path = _artifact(out_dir, name)
    if not path.exists():
        raise ValidationError(
            f"missing artifact {path}; run the producing stage first")
    return path


def stage_build_graph(memberships_path, lists_path, out_dir,
                      config: PipelineConfig) -> None:
    corpus = corp.load_corpus(memberships_path, lists_path)
    graph = lg.build_list_graph(corpus, lg.GraphBuildConfig(rho=config.rho))
    lg.save_graph(graph, _artifact(out_dir, "graph"), _artifact(out_dir, "nodes"))


def stage_ensemble(out_dir, config: PipelineConfig) -> None:
    graph = lg.load_graph(_require(out_dir, "graph"), _require(out_dir, "nodes"))
    matrix = cons.run_ensemble(graph, config.ensemble_config(),
                               workers=config.workers)
    cons.save_matrix(matrix, _artifact(out_dir, "consensus"))


def stage_consensus(out_dir, config: PipelineConfig) -> None:
    ens = config.ensemble_config()
    if config.iterate:
        graph = lg.load_graph(_require(out_dir, "graph"), _require(out_dir, "nodes"))
        matrix, cover = cons.iterate_consensus(graph, ens, workers=config.workers)
        cons.save_matrix(matrix, _artifact(out_dir, "consensus"))
    else:
        matrix = _load_matrix(out_dir)
        cover = cons.consensus_communities(matrix, ens)
    save_communities(cover, _artifact(out_dir, "communities"))


def _load_matrix(out_dir) -> cons.ConsensusMatrix:
    nodes_path = _artifact(out_dir, "nodes")
    order: tuple[str, ...] | None = None
    if nodes_path.exists():
        order = tuple(
            line.rstrip("\n")
            for line in nodes_path.read_text("utf-8").splitlines()
            if line
        )
    return cons.load_matrix(_require(out_dir, "consensus"), order=order)


def stage_stability(out_dir, config: PipelineConfig) -> None:
    if not _artifact(out_dir, "nodes").exists():
        raise ValidationError(
            "stability needs graph.nodes to define the sampling universe")
    matrix = _load_matrix(out_dir)
    cover = load_communities(_require(out_dir, "communities"))
    ranked = stab.rank_communities(
        cover, matrix, config.draws,
        derive_seed(config.master_seed, STREAM_STABILITY))
    stab.write_ranking(ranked, cover, _artifact(out_dir, "stability"))


def stage_label(memberships_path, lists_path, out_dir,
                config: PipelineConfig) -> None:
    corpus = corp.load_corpus(memberships_path, lists_path)
    cover = load_communities(_require(out_dir, "communities"))
    lcfg = config.labeling_config()
    vectors = lab.build_vectors(corpus, lcfg)
    background = lab.background_vector(vectors)
    labels = {
        cid: lab.label_community(community, vectors, lcfg, background=background)
        for cid, community in enumerate(cover)
    }
    lab.write_labels(labels, _artifact(out_dir, "labels"))


def _read_stability(out_dir) -> dict[int, float]:
    path = _artifact(out_dir, "stability")
    scores: dict[int, float] = {}
    if path.exists():
        for line in path.read_text("utf-8").splitlines():
            fields_ = line.split("\t")
            scores[int(fields_[5])] = float(fields_[1])
    return scores


def stage_members(memberships_path, lists_path, out_dir,
                  config: PipelineConfig) -> None:
    corpus = corp.load_corpus(memberships_path, lists_path)
    cover = load_communities(_require(out_dir, "communities"))
    user_communities = [
        memb.derive_members(community, corpus, config.mu, community_id=cid)
        for cid, community in enumerate(cover)
    ]
    labels_path = _artifact(out_dir, "labels")
    labels_by_id = lab.load_labels(labels_path) if labels_path.exists() else {}
    memb.write_users(user_communities, _artifact(out_dir, "users"),
                     stability_by_id=_read_stability(out_dir),
                     labels_by_id=labels_by_id)


def stage_evaluate(groundtruth_path, out_dir, config: PipelineConfig,
                   core_path=None) -> None:
    truth = corp.load_ground_truth(groundtruth_path)
    user_communities = memb.load_users(_require(out_dir, "users"))
    if core_path is not None:
        core = frozenset(
            line.strip()
            for line in Path(core_path).read_text("utf-8").splitlines()
            if line.strip()
        )
    else:
        core = frozenset().union(*truth.categories.values()) if truth.categories else frozenset()
    rows = memb.evaluate(user_communities, truth, core)
    memb.write_eval(rows, truth, _artifact(out_dir, "eval"))


def run_pipeline(
    memberships_path,
    lists_path,
    out_dir,
    config: PipelineConfig,
    groundtruth_path=None,
    core_path=None,
) -> dict[str, Path]:
    """Run every stage in order; artifacts from completed stages survive a
    failure, which is reported with the failing stage's name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages: list[tuple[str, object]] = [
        ("build-graph", lambda: stage_build_graph(memberships_path, lists_path, out, config)),
        ("ensemble", lambda: stage_ensemble(out, config)),
        ("consensus", lambda: stage_consensus(out, config)),
        ("stability", lambda: stage_stability(out, config)),
        ("label", lambda: stage_label(memberships_path, lists_path, out, config)),
        ("members", lambda: stage_members(memberships_path, lists_path, out, config)),
    ]
    if groundtruth_path is not None:
        stages.append(("evaluate",
                       lambda: stage_evaluate(groundtruth_path, out, config, core_path)))
    for name, run in stages:
        try:
            run()
        except Exception as exc:
            raise StageError(name, exc) from exc
    produced = {name: _artifact(out, name) for name in ARTIFACTS}
    if groundtruth_path is None:
        produced.pop("eval")
    return {name: path for name, path in produced.items() if path.exists()}
