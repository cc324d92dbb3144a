import json

import numpy as np
import pytest

from cartoseg.cli import main
from cartoseg.raster import read_mask, write_raster
from cartoseg.synth import SceneSpec, generate_scene


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_corpus")
    assert main(["synth", "--kind", "mixed", "--n", "4", "--seed", "5",
                 "--noise", "4", "--clutter", "1", "--out", str(root)]) == 0
    return root


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["synth", "--kind", "volcano", "--out", "x"])
        assert exc.value.code == 1

    def test_missing_file_is_two(self, tmp_path):
        rc = main(["edges", "--pan", str(tmp_path / "nope.pgm"), "--out", str(tmp_path / "e.json")])
        assert rc == 2

    def test_budget_exceeded_is_three(self, tmp_path, corpus_dir):
        masks = tmp_path / "masks"
        masks.mkdir()
        for entry in json.loads((corpus_dir / "manifest.json").read_text())["scenes"][:2]:
            m = read_mask(corpus_dir / entry["files"]["truth_mask"])
            write_raster(m, masks / f"{entry['id']}.pgm")
        rc = main(["model", "--masks", str(masks), "--out", str(tmp_path / "m.json"),
                   "--node-budget", "2"])
        assert rc == 3


class TestSynth(object):
    def test_writes_manifest(self, corpus_dir):
        manifest = json.loads((corpus_dir / "manifest.json").read_text())
        assert len(manifest["scenes"]) == 4
        kinds = {e["kind"] for e in manifest["scenes"]}
        assert kinds == {"bridge", "roundabout"}


class TestStageCommands:
    def test_segment(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "seg"
        rc = main(["segment", "--ms", str(corpus_dir), "--delta", "10", "--out", str(out)])
        assert rc == 0
        assert (out / "threshold.txt").read_text().startswith("t_high=")
        assert len(list(out.glob("*_region.pgm"))) == 4

    def test_edges_match_extract_chain(self, corpus_dir, tmp_path, capsys):
        entry = json.loads((corpus_dir / "manifest.json").read_text())["scenes"][0]
        pan_path = corpus_dir / entry["files"]["pan"]
        edges_path = tmp_path / "edges.json"
        rc = main(["edges", "--pan", str(pan_path), "--high-percentile", "95",
                   "--out", str(edges_path)])
        assert rc == 0 and edges_path.exists()

        # match the centered truth mask against the displaced scene
        spec_kwargs = dict(kind=entry["kind"], seed=entry["seed"], noise=entry["noise"],
                           clutter=entry["clutter"], offset=(0, 0))
        # regenerate the centered mask deterministically
        _, _, truth0 = generate_scene(SceneSpec(**spec_kwargs))
        mask_path = tmp_path / "mask.pgm"
        write_raster(truth0.mask, mask_path)
        capsys.readouterr()
        rc = main(["match", "--mask", str(mask_path), "--pan", str(pan_path),
                   "--edges", str(edges_path), "--se-radius", "1"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert doc["offset"] == entry["offset"]

        out = tmp_path / "extract"
        matched = tmp_path / "matched.pgm"
        from cartoseg.raster import translate

        write_raster(translate(truth0.mask, *doc["offset"]), matched)
        rc = main(["extract", "--pan", str(pan_path), "--mask", str(matched),
                   "--edges", str(edges_path), "--out", str(out)])
        assert rc == 0
        obj = read_mask(out / "object.pgm")
        truth = read_mask(corpus_dir / entry["files"]["truth_mask"])
        inter = np.count_nonzero(obj.bits & truth.bits)
        union = np.count_nonzero(obj.bits | truth.bits)
        assert inter / union >= 0.8

    def test_model_and_score(self, corpus_dir, tmp_path, capsys):
        masks = tmp_path / "masks"
        masks.mkdir()
        entries = json.loads((corpus_dir / "manifest.json").read_text())["scenes"]
        round_entries = [e for e in entries if e["kind"] == "roundabout"]
        for e in round_entries:
            m = read_mask(corpus_dir / e["files"]["truth_mask"])
            write_raster(m, masks / f"{e['id']}.pgm")
        model_path = tmp_path / "model.json"
        rc = main(["model", "--masks", str(masks), "--out", str(model_path)])
        assert rc == 0 and model_path.exists()
        capsys.readouterr()
        rc = main(["score", "--model", str(model_path),
                   "--mask", str(masks / f"{round_entries[0]['id']}.pgm")])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out.strip())
        assert 0.0 <= doc["distance"] <= 1.0

    def test_eval(self, corpus_dir, tmp_path, capsys):
        entry = json.loads((corpus_dir / "manifest.json").read_text())["scenes"][0]
        t = str(corpus_dir / entry["files"]["truth_mask"])
        rc = main(["eval", "--result", t, "--truth", t])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out.strip())
        assert doc == {"category": "correct", "iou": 1.0}


class TestPipelineCommand:
    def test_full_run_with_flag_override(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["pipeline", "--corpus", str(corpus_dir), "--out", str(out),
                   "--min_support", "1"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "Extract." in text
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["min_support"] == 1
        assert len(report["scenes"]) == 4

    def test_config_file(self, corpus_dir, tmp_path):
        cfg = tmp_path / "pipeline.cfg"
        cfg.write_text("delta=10\nsave_intermediates=false\n")
        out = tmp_path / "out2"
        rc = main(["pipeline", "--config", str(cfg), "--corpus", str(corpus_dir),
                   "--out", str(out)])
        assert rc == 0
        assert not list(out.glob("*_region.pgm"))  # intermediates disabled
        assert (out / "report.json").exists()
