import json

import numpy as np
import pytest

from cartoseg.pipeline import PipelineConfig, evaluate, run_pipeline
from cartoseg.raster import BinaryMask
from cartoseg.synth import SceneSpec, corpus_specs, write_corpus


def mask_of(bits):
    return BinaryMask(np.asarray(bits, dtype=bool))


class TestEvaluate:
    def test_identity(self):
        m = mask_of(np.eye(6))
        assert evaluate(m, m) == (1.0, "correct")

    def test_disjoint(self):
        a = np.zeros((6, 6), dtype=bool)
        a[0, 0] = True
        b = np.zeros((6, 6), dtype=bool)
        b[5, 5] = True
        iou, cat = evaluate(mask_of(a), mask_of(b))
        assert iou == 0.0 and cat == "incorrect"

    def test_half_overlapping_squares_one_third(self):
        a = np.zeros((8, 12), dtype=bool)
        b = np.zeros((8, 12), dtype=bool)
        a[2:6, 2:6] = True
        b[2:6, 4:8] = True  # overlap 4x2 = 8; union 24
        iou, cat = evaluate(mask_of(a), mask_of(b))
        assert iou == pytest.approx(1 / 3)
        assert cat == "incorrect"

    def test_both_empty_degenerate_correct(self):
        e = mask_of(np.zeros((4, 4)))
        assert evaluate(e, e) == (1.0, "correct")

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(mask_of(np.zeros((4, 4))), mask_of(np.zeros((5, 4))))

    def test_acceptable_band(self):
        a = np.zeros((10, 10), dtype=bool)
        b = np.zeros((10, 10), dtype=bool)
        a[0:6, 0:10] = True
        b[2:8, 0:10] = True  # IoU = 40/80 = 0.5
        iou, cat = evaluate(mask_of(a), mask_of(b))
        assert iou == pytest.approx(0.5) and cat == "acceptable"


class TestConfig:
    def test_defaults_valid(self):
        cfg = PipelineConfig()
        assert cfg.iou_correct >= cfg.iou_acceptable

    def test_threshold_order_enforced(self):
        with pytest.raises(ValueError):
            PipelineConfig(iou_correct=0.4, iou_acceptable=0.6)

    def test_from_file_and_overrides(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text("# comment\ndelta=12.5\nhalf_window=8\nse_shape=square\n")
        cfg = PipelineConfig.from_file(p)
        assert cfg.delta == 12.5 and cfg.half_window == 8 and cfg.se_shape == "square"
        cfg2 = cfg.with_overrides({"delta": "3", "build_models": "false"})
        assert cfg2.delta == 3.0 and cfg2.build_models is False

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text("no_such_knob=1\n")
        with pytest.raises(ValueError):
            PipelineConfig.from_file(p)


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    specs = corpus_specs(2, 2, seed=21, noise=4.0, clutter=1)
    write_corpus(root, specs)
    return root


class TestRunPipeline:
    def test_stages_and_quality(self, small_corpus, tmp_path):
        cfg = PipelineConfig(corpus=str(small_corpus), out=str(tmp_path / "out"))
        report = run_pipeline(cfg)
        assert len(report.scenes) == 4
        for scene in report.scenes:
            assert "error" not in scene
            for stage in ("segment", "match", "extract"):
                assert scene["stages"][stage]["iou"] >= 0.5
        agg = report.aggregate
        for stage in ("segment", "match", "extract"):
            total = sum(sum(c.values()) for c in agg[stage].values())
            assert total == 4  # counts sum to corpus size per stage
        assert (tmp_path / "out" / "report.json").exists()
        assert (tmp_path / "out" / "report.txt").exists()
        assert (tmp_path / "out" / "scene_000_object.pgm").exists()
        assert report.models["bridge"]["prototypes"] >= 1

    def test_error_isolation(self, small_corpus, tmp_path):
        import shutil

        broken = tmp_path / "broken"
        shutil.copytree(small_corpus, broken)
        (broken / "scene_001_pan.pgm").write_bytes(b"P5\n4 4\n255\n")  # truncated
        cfg = PipelineConfig(corpus=str(broken), out=str(tmp_path / "out"))
        report = run_pipeline(cfg)
        failed = [s for s in report.scenes if "error" in s]
        assert len(failed) == 1 and failed[0]["id"] == "scene_001"
        assert failed[0]["failed_stage"] == "load"
        done = [s for s in report.scenes if "error" not in s]
        assert len(done) == 3
        # the failed scene counts as incorrect in every stage aggregate
        kind = failed[0]["kind"]
        assert report.aggregate["extract"][kind]["incorrect"] >= 1

    def test_byte_identical_reruns(self, small_corpus, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        run_pipeline(PipelineConfig(corpus=str(small_corpus), out=str(out_a)))
        run_pipeline(PipelineConfig(corpus=str(small_corpus), out=str(out_b)))
        ra = (out_a / "report.json").read_bytes()
        rb = (out_b / "report.json").read_bytes()
        # the config block embeds the out path; compare everything else
        da, db = json.loads(ra), json.loads(rb)
        da["config"].pop("out"), db["config"].pop("out")
        assert da == db
        for pgm in sorted(out_a.glob("*.pgm")):
            assert pgm.read_bytes() == (out_b / pgm.name).read_bytes()

    def test_noise_free_scene_extraction_quality(self, tmp_path):
        # generous geometry: every stage optimum is known and the boundary
        # discretization loss is small relative to the object area
        specs = [
            SceneSpec(
                kind="bridge",
                seed=77,
                offset=(0, 0),
                noise=0.0,
                clutter=0,
                road_width_m=50.0,
                main_angle=0.5,
            )
        ]
        corpus = tmp_path / "one"
        write_corpus(corpus, specs)
        report = run_pipeline(
            PipelineConfig(corpus=str(corpus), out=str(tmp_path / "out_one"))
        )
        extract = report.scenes[0]["stages"]["extract"]
        assert extract["iou"] >= 0.95
        assert extract["category"] == "correct"

    def test_report_text_shape(self, small_corpus, tmp_path):
        cfg = PipelineConfig(corpus=str(small_corpus), out=str(tmp_path / "out"))
        report = run_pipeline(cfg)
        text = report.to_text()
        lines = text.strip().splitlines()
        assert lines[0].split() == ["Step", "Object", "Correct", "Acceptable", "Incorrect"]
        assert len(lines) == 1 + 3 * 2  # three stages x two kinds
        assert "Segm." in text and "Match." in text and "Extract." in text
