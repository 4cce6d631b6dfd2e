import filecmp
import json
from pathlib import Path

import pytest

from listcom.cli import main
from listcom.errors import ParseError, ValidationError
from listcom.pipeline import (ARTIFACTS, PipelineConfig, parse_config_file,
                              resolve_config, run_pipeline)
from listcom.synth import PlantedSpec, synth_files

SPEC = PlantedSpec(groups=4, users_per_group=18, lists_per_group=12,
                   size_min=5, size_max=12, noise=0.1, overlap=0.1)


@pytest.fixture(scope="module")
def corpus_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    return synth_files(SPEC, 21, out)


def fast_config(**overrides):
    base = dict(runs=6, master_seed=3, draws=100, workers=1)
    base.update(overrides)
    return PipelineConfig(**base)


def bundle_bytes(out_dir):
    return {
        name: (Path(out_dir) / fname).read_bytes()
        for name, fname in ARTIFACTS.items()
        if (Path(out_dir) / fname).exists()
    }


def test_config_defaults_match_reported_parameters():
    cfg = PipelineConfig()
    assert (cfg.rho, cfg.runs, cfg.tau, cfg.mu) == (6.0, 100, 0.2, 0.1)
    assert cfg.top_k == 3
    assert cfg.draws == 1000


def test_config_validation():
    with pytest.raises(ValidationError):
        PipelineConfig(tau=1.5)
    with pytest.raises(ValidationError):
        PipelineConfig(runs=0)
    with pytest.raises(ValidationError):
        PipelineConfig(mu=-0.1)


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nrho = 4.5\nruns=7\n\nmu = 0.2\n",
                    encoding="utf-8")
    values = parse_config_file(path)
    assert values == {"rho": "4.5", "runs": "7", "mu": "0.2"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("rho 4.5\n", encoding="utf-8")
    with pytest.raises(ParseError):
        parse_config_file(bad)


def test_config_precedence_matrix(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("rho = 4.0\nruns = 9\n", encoding="utf-8")
    # defaults only
    assert resolve_config({}, None).rho == 6.0
    # file overrides defaults
    cfg = resolve_config({}, path)
    assert cfg.rho == 4.0 and cfg.runs == 9
    # flags override the file; unset flags (None) fall through
    cfg = resolve_config({"rho": 2.5, "runs": None}, path)
    assert cfg.rho == 2.5 and cfg.runs == 9
    with pytest.raises(ValidationError):
        resolve_config({"bogus_key": 1}, None)
    badfile = tmp_path / "bad.cfg"
    badfile.write_text("bogus = 1\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        resolve_config({}, badfile)


def test_run_pipeline_produces_bundle(corpus_files, tmp_path):
    out = tmp_path / "run"
    produced = run_pipeline(corpus_files["memberships"], corpus_files["lists"],
                            out, fast_config(),
                            groundtruth_path=corpus_files["groundtruth"])
    for name in ("graph", "nodes", "consensus", "communities", "stability",
                 "labels", "users", "eval"):
        assert produced[name].exists(), name
    payload = json.loads((out / "users.json").read_text("utf-8"))
    assert payload and all("users" in entry for entry in payload)


def test_run_pipeline_byte_identical_reruns(corpus_files, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        run_pipeline(corpus_files["memberships"], corpus_files["lists"], out,
                     fast_config(),
                     groundtruth_path=corpus_files["groundtruth"])
    assert bundle_bytes(out1) == bundle_bytes(out2)


def test_stagewise_equals_one_shot(corpus_files, tmp_path):
    from listcom import pipeline as pipe

    cfg = fast_config()
    one = tmp_path / "oneshot"
    run_pipeline(corpus_files["memberships"], corpus_files["lists"], one, cfg,
                 groundtruth_path=corpus_files["groundtruth"])
    staged = tmp_path / "staged"
    staged.mkdir()
    pipe.stage_build_graph(corpus_files["memberships"], corpus_files["lists"],
                           staged, cfg)
    pipe.stage_ensemble(staged, cfg)
    pipe.stage_consensus(staged, cfg)
    pipe.stage_stability(staged, cfg)
    pipe.stage_label(corpus_files["memberships"], corpus_files["lists"],
                     staged, cfg)
    pipe.stage_members(corpus_files["memberships"], corpus_files["lists"],
                       staged, cfg)
    pipe.stage_evaluate(corpus_files["groundtruth"], staged, cfg)
    assert bundle_bytes(one) == bundle_bytes(staged)


def test_stage_error_names_stage(tmp_path):
    from listcom.errors import StageError

    cfg = fast_config()
    with pytest.raises(StageError, match="build-graph"):
        run_pipeline(tmp_path / "missing.tsv", tmp_path / "missing.jsonl",
                     tmp_path / "out", cfg)


def test_cli_full_stage_sequence(tmp_path):
    data = tmp_path / "data"
    assert main(["synth", "--out", str(data), "--groups", "3",
                 "--users-per-group", "15", "--lists-per-group", "10",
                 "--size-min", "5", "--size-max", "10", "--noise", "0.1",
                 "--overlap", "0.1", "--seed", "11"]) == 0
    out = tmp_path / "run"
    corpus_flags = ["--memberships", str(data / "memberships.tsv"),
                    "--lists", str(data / "lists.jsonl")]
    common = ["--out", str(out), "--runs", "5", "--master-seed", "2",
              "--draws", "60"]
    assert main(["build-graph", *corpus_flags, *common]) == 0
    assert main(["ensemble", *common]) == 0
    assert main(["consensus", *common]) == 0
    assert main(["stability", *common]) == 0
    assert main(["label", *corpus_flags, *common]) == 0
    assert main(["members", *corpus_flags, *common]) == 0
    assert main(["evaluate", "--groundtruth", str(data / "groundtruth.tsv"),
                 *common]) == 0
    for fname in ARTIFACTS.values():
        assert (out / fname).exists(), fname


def test_cli_pipeline_matches_stagewise(tmp_path):
    data = tmp_path / "data"
    main(["synth", "--out", str(data), "--groups", "3",
          "--users-per-group", "15", "--lists-per-group", "10",
          "--size-min", "5", "--size-max", "10", "--noise", "0.1",
          "--overlap", "0.1", "--seed", "11"])
    corpus_flags = ["--memberships", str(data / "memberships.tsv"),
                    "--lists", str(data / "lists.jsonl")]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = [*corpus_flags, "--runs", "5", "--master-seed", "2",
            "--draws", "60", "--groundtruth", str(data / "groundtruth.tsv")]
    assert main(["pipeline", "--out", str(out1), *args]) == 0
    assert main(["pipeline", "--out", str(out2), *args]) == 0
    assert bundle_bytes(out1) == bundle_bytes(out2)


def test_cli_exit_codes(tmp_path):
    data = tmp_path / "data"
    main(["synth", "--out", str(data), "--groups", "2",
          "--users-per-group", "10", "--lists-per-group", "6",
          "--size-min", "4", "--size-max", "8", "--seed", "1"])
    corpus_flags = ["--memberships", str(data / "memberships.tsv"),
                    "--lists", str(data / "lists.jsonl")]
    out = tmp_path / "run"
    # validation error: tau out of range
    assert main(["pipeline", *corpus_flags, "--out", str(out),
                 "--tau", "1.5"]) == 2
    # parse error: malformed memberships file
    broken = tmp_path / "broken.tsv"
    broken.write_text("no-tabs-here\n", encoding="utf-8")
    assert main(["pipeline", "--memberships", str(broken),
                 "--lists", str(data / "lists.jsonl"),
                 "--out", str(out)]) == 3
    # parse error: malformed config file
    badcfg = tmp_path / "bad.cfg"
    badcfg.write_text("not a key value line\n", encoding="utf-8")
    assert main(["pipeline", *corpus_flags, "--out", str(out),
                 "--config", str(badcfg)]) == 3
    # missing artifact for a resumed stage is a validation error
    assert main(["consensus", "--out", str(tmp_path / "empty")]) == 2


def test_cli_config_file_respected(tmp_path):
    data = tmp_path / "data"
    main(["synth", "--out", str(data), "--groups", "2",
          "--users-per-group", "12", "--lists-per-group", "8",
          "--size-min", "4", "--size-max", "9", "--seed", "4"])
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("runs = 4\nmaster_seed = 9\ndraws = 50\n",
                       encoding="utf-8")
    out1, out2 = tmp_path / "via-file", tmp_path / "via-flags"
    corpus_flags = ["--memberships", str(data / "memberships.tsv"),
                    "--lists", str(data / "lists.jsonl")]
    assert main(["pipeline", *corpus_flags, "--out", str(out1),
                 "--config", str(cfgfile)]) == 0
    assert main(["pipeline", *corpus_flags, "--out", str(out2),
                 "--runs", "4", "--master-seed", "9", "--draws", "50"]) == 0
    assert bundle_bytes(out1) == bundle_bytes(out2)


def test_cli_iterate_flag(tmp_path):
    data = tmp_path / "data"
    main(["synth", "--out", str(data), "--groups", "2",
          "--users-per-group", "12", "--lists-per-group", "8",
          "--size-min", "4", "--size-max", "9", "--seed", "4"])
    out = tmp_path / "run"
    corpus_flags = ["--memberships", str(data / "memberships.tsv"),
                    "--lists", str(data / "lists.jsonl")]
    common = ["--out", str(out), "--runs", "4", "--master-seed", "2"]
    assert main(["build-graph", *corpus_flags, *common]) == 0
    assert main(["ensemble", *common]) == 0
    assert main(["consensus", *common, "--iterate"]) == 0
    assert (out / ARTIFACTS["communities"]).exists()


def test_stopword_override_changes_labels(tmp_path):
    custom = tmp_path / "stop.txt"
    custom.write_text("topic00\n", encoding="utf-8")
    cfg = PipelineConfig(stopwords=str(custom))
    assert cfg.labeling_config().stopwords == frozenset({"topic00"})
    assert "the" in PipelineConfig().labeling_config().stopwords


def test_partial_artifacts_retained_on_failure(corpus_files, tmp_path):
    from listcom.errors import StageError

    out = tmp_path / "run"
    cfg = fast_config()
    # give evaluate a missing ground-truth path: earlier artifacts must stay
    with pytest.raises(StageError, match="evaluate"):
        run_pipeline(corpus_files["memberships"], corpus_files["lists"], out,
                     cfg, groundtruth_path=tmp_path / "nope.tsv")
    assert (out / ARTIFACTS["users"]).exists()
    assert not (out / ARTIFACTS["eval"]).exists()
