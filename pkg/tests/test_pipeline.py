from pathlib import Path

import numpy as np
import pytest

from triplewalk.commands.config_file import build_pipeline_config
from triplewalk.errors import StageError
from triplewalk.main import main
from triplewalk.models.schemas import Stage, StageStatus
from triplewalk.services.artifacts import read_metrics
from triplewalk.services.pipeline import run_pipeline

FAST = ["--walks", "2", "--walk-length", "8", "--window", "2", "--dim", "8", "--negatives", "2", "--epochs", "1"]

DETERMINISTIC_ARTIFACTS = [
    "line_graph.tsv", "line_nodes.tsv", "centrality.tsv", "weighted_line_graph.tsv",
    "walks.txt", "embeddings.txt", "metrics.tsv",
]


def weights_of(path: Path):
    rows = path.read_text(encoding="utf-8").splitlines()[1:]
    return [float(r.split()[2]) for r in rows]


def test_kg_smoke_run(toy_kg_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--input", str(toy_kg_file), "--kind", "kg", "--out", str(out), *FAST]) == 0
    for name in ["line_graph.tsv", "relatedness.tsv", "weighted_line_graph.tsv", "walks.txt",
                 "embeddings.txt", "metrics.tsv", "pipeline.log"]:
        assert (out / name).is_file(), name
    assert (out / "embeddings.txt").read_text(encoding="utf-8").splitlines()[0] == "3 8"
    rows = read_metrics(out / "metrics.tsv")
    assert [(r.task, r.metric) for r in rows] == [("embed", "mean_objective")]
    assert rows[0].dataset == "toy"


def test_incompatible_weighting_is_a_config_error(karate_file, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--input", str(karate_file), "--kind", "homogeneous", "--weighting", "relatedness",
                 "--out", str(out)])
    assert code == 2
    assert not (out / "line_graph.tsv").exists()


def test_karate_run_embeds_every_edge(karate_file, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--input", str(karate_file), "--kind", "homogeneous", "--out", str(out),
                 "--task", "none", "--walks", "2", "--walk-length", "20", "--epochs", "1"])
    assert code == 0
    header = (out / "embeddings.txt").read_text(encoding="utf-8").splitlines()[0]
    assert header == "78 32"
    assert len((out / "centrality.tsv").read_text(encoding="utf-8").splitlines()) == 34


def test_deterministic_runs_are_byte_identical(karate_file, tmp_path):
    args = ["run", "--input", str(karate_file), "--kind", "homogeneous", "--threads", "1", "--seed", "5",
            "--task", "cluster", "--runs", "2", *FAST]
    assert main([*args, "--out", str(tmp_path / "first")]) == 0
    assert main([*args, "--out", str(tmp_path / "second")]) == 0
    for name in DETERMINISTIC_ARTIFACTS:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes(), name


def test_stage_commands_chain(karate_file, tmp_path):
    out = str(tmp_path / "out")
    common = ["--input", str(karate_file), "--kind", "homogeneous", "--out", out]
    assert main(["build-line-graph", *common]) == 0
    assert main(["weigh", *common, "--weighting", "uniform"]) == 0
    assert set(weights_of(tmp_path / "out" / "weighted_line_graph.tsv")) == {1.0}

    assert main(["walk", *common, "--seed", "7", "--walks", "2"]) == 0
    first = (tmp_path / "out" / "walks.txt").read_bytes()
    assert main(["walk", *common, "--seed", "7", "--walks", "2"]) == 0
    assert (tmp_path / "out" / "walks.txt").read_bytes() == first


def test_missing_upstream_artifact_names_the_stage(karate_file, tmp_path):
    cfg = build_pipeline_config({"input": str(karate_file), "kind": "homogeneous", "out": str(tmp_path)})
    with pytest.raises(StageError, match="run 'weigh' first"):
        run_pipeline(cfg, [Stage.WALK])
    assert main(["embed", "--input", str(karate_file), "--kind", "homogeneous", "--out", str(tmp_path)]) == 1


def test_resume_skips_finished_stages(karate_file, tmp_path):
    out = tmp_path / "out"
    args = ["run", "--input", str(karate_file), "--kind", "homogeneous", "--out", str(out), "--task", "none", *FAST]
    assert main(args) == 0
    walks = (out / "walks.txt").read_bytes()

    cfg = build_pipeline_config({"input": str(karate_file), "kind": "homogeneous", "out": str(out),
                                 "task": "none", "seed": 99, "resume": True})
    results = run_pipeline(cfg)
    assert [r.status for r in results] == [StageStatus.SKIPPED] * 4
    assert (out / "walks.txt").read_bytes() == walks


def test_failed_stage_keeps_earlier_artifacts(tmp_path):
    graph = tmp_path / "split.edges"
    graph.write_text("a b\nb c\nx y\ny z\n", encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", "--input", str(graph), "--kind", "homogeneous", "--out", str(out)]) == 1
    assert (out / "line_graph.tsv").is_file()
    assert not (out / "weighted_line_graph.tsv").exists()
    assert "disconnected" in (out / "pipeline.log").read_text(encoding="utf-8")


def test_eval_cluster_on_blob_embeddings(tmp_path):
    rng = np.random.default_rng(0)
    out = tmp_path / "out"
    out.mkdir()
    vectors = np.vstack([rng.normal(-4, 0.3, size=(10, 3)), rng.normal(4, 0.3, size=(10, 3))])
    lines = ["20 3"] + [f"b{i} " + " ".join(f"{x:.6f}" for x in row) for i, row in enumerate(vectors)]
    (out / "embeddings.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    labels = tmp_path / "blobs.labels"
    labels.write_text("".join(f"b{i}\t{'left' if i < 10 else 'right'}\n" for i in range(20)), encoding="utf-8")
    graph = tmp_path / "blobs.edges"
    graph.write_text("a b\n", encoding="utf-8")

    code = main(["eval-cluster", "--input", str(graph), "--kind", "homogeneous", "--labels", str(labels),
                 "--k", "2", "--runs", "2", "--out", str(out)])
    assert code == 0
    rows = read_metrics(out / "metrics.tsv")
    assert [(r.task, r.metric) for r in rows] == [("cluster", "nmi")]
    assert rows[0].value == pytest.approx(1.0)


def test_kg_classification_writes_curves(data_dir, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--input", str(data_dir / "toy_kg.tsv"), "--kind", "kg",
                 "--labels", str(data_dir / "toy_kg_labels.tsv"), "--rules", str(data_dir / "rules" / "dblp.rules"),
                 "--train-fraction", "0.3,0.6", "--runs", "2", "--out", str(out), *FAST])
    assert code == 0
    tasks = {r.task for r in read_metrics(out / "metrics.tsv")}
    assert tasks == {"embed", "classify", "cluster"}
    curve = (out / "toy_kg_micro_f1.dat").read_text(encoding="utf-8").splitlines()
    assert [line.split()[0] for line in curve] == ["30", "60"]


def test_config_file_drives_the_run(karate_file, tmp_path):
    out = tmp_path / "out"
    conf = tmp_path / "karate.conf"
    conf.write_text(f"input = {karate_file}\nkind = homogeneous\nout = {out}\ntask = none\n"
                    "walks = 1\nwalk-length = 5\ndim = 4\nepochs = 1\n", encoding="utf-8")
    assert main(["run", "--config", str(conf), "--dim", "6"]) == 0
    assert (out / "embeddings.txt").read_text(encoding="utf-8").splitlines()[0] == "78 6"
