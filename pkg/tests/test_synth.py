import json
import math
from dataclasses import replace

import numpy as np
import pytest

from cartoseg.graphs import decompose
from cartoseg.raster import read_mask, read_raster, translate
from cartoseg.spectral import band_combine
from cartoseg.synth import (
    GroundTruth,
    SceneSpec,
    SpecError,
    corpus_specs,
    generate_scene,
    load_truth,
    write_corpus,
)


class TestSpecValidation:
    def test_kind(self):
        with pytest.raises(SpecError):
            SceneSpec(kind="tunnel")

    def test_offset_bound(self):
        with pytest.raises(SpecError):
            SceneSpec(kind="bridge", offset=(11, 0))

    def test_geometry(self):
        with pytest.raises(SpecError):
            SceneSpec(kind="bridge", road_width_m=0)
        with pytest.raises(SpecError):
            SceneSpec(kind="roundabout", circle_radius_m=10.0, road_width_m=30.0)

    def test_resolution_factor(self):
        with pytest.raises(SpecError):
            SceneSpec(kind="bridge", ms_res=9.0)
        assert SceneSpec(kind="bridge").factor == 4


class TestGenerateScene:
    def test_shapes_and_metadata(self):
        spec = SceneSpec(kind="roundabout", seed=4)
        pan, ms, truth = generate_scene(spec)
        assert (pan.width, pan.height, pan.resolution) == (128, 128, 2.5)
        assert (ms.width, ms.height, ms.resolution) == (48, 48, 10.0)
        assert isinstance(truth, GroundTruth)
        assert not truth.mask.is_empty()

    def test_deterministic(self):
        spec = SceneSpec(kind="bridge", seed=123, noise=5.0, clutter=3, offset=(4, -6))
        a = generate_scene(spec)
        b = generate_scene(spec)
        assert np.array_equal(a[0].data, b[0].data)
        for c1, c2 in zip(a[1].channels, b[1].channels):
            assert np.array_equal(c1.data, c2.data)
        assert np.array_equal(a[2].mask.bits, b[2].mask.bits)

    def test_seed_changes_scene(self):
        a = generate_scene(SceneSpec(kind="bridge", seed=1))
        b = generate_scene(SceneSpec(kind="bridge", seed=2))
        assert not np.array_equal(a[0].data, b[0].data)

    def test_band_combine_max_on_roads(self):
        spec = SceneSpec(kind="roundabout", seed=9, noise=0.0, clutter=0, offset=(0, 0))
        pan, ms, truth = generate_scene(spec)
        combined = band_combine(ms).data
        top = combined >= combined.max() - 1e-9
        # truth only covers the pan frame (ms cells 8..39); roads continue
        # beyond it, so assert on that window
        obj_big = np.zeros((192, 192), dtype=bool)
        obj_big[32:160, 32:160] = truth.mask.bits
        road_frac = obj_big.reshape(48, 4, 48, 4).mean(axis=(1, 3))
        inner = np.zeros((48, 48), dtype=bool)
        inner[8:40, 8:40] = True
        assert combined.max() == pytest.approx(90.0, abs=1.0)
        assert (road_frac[top & inner] > 0.99).all()  # maxima only on road blocks
        assert (top & inner).any()

    def test_offset_displaces_pan_content(self):
        spec = SceneSpec(kind="bridge", seed=5, offset=(3, -2))
        _, _, truth = generate_scene(spec)
        _, _, truth0 = generate_scene(replace(spec, offset=(0, 0)))
        assert truth.offset == (3, -2)
        moved = translate(truth0.mask, 3, -2)
        # identical away from the frame band where content enters/leaves
        assert np.array_equal(
            moved.bits[12:-12, 12:-12], truth.mask.bits[12:-12, 12:-12]
        )

    def test_truth_primitives_recoverable_from_mask(self):
        spec = SceneSpec(kind="roundabout", seed=2, offset=(0, 0))
        _, _, truth = generate_scene(spec)
        prims = decompose(truth.mask, "skeleton", resolution=2.5)
        circles = [p for p in prims if p.kind == "circle"]
        segs = [p for p in prims if p.kind == "segment"]
        assert len(circles) == 1
        assert circles[0].radius == pytest.approx(spec.circle_radius_m, abs=2.5)
        assert len(segs) == 4
        want = {truth.primitives[1].orientation % math.pi, truth.primitives[2].orientation % math.pi}
        for s in segs:
            diff = min(
                min(abs(s.orientation - w), math.pi - abs(s.orientation - w)) for w in want
            )
            assert diff < math.radians(5.0)

    def test_bridge_mask_arm_orientations(self):
        spec = SceneSpec(kind="bridge", seed=3, offset=(0, 0), main_angle=0.6)
        _, _, truth = generate_scene(spec)
        prims = decompose(truth.mask, "skeleton", resolution=2.5)
        segs = [p for p in prims if p.kind == "segment" and p.length > 20.0]
        want = {0.6 % math.pi, (0.6 + spec.crossing_angle) % math.pi}
        assert len(segs) >= 3
        for s in segs:
            diff = min(
                min(abs(s.orientation - w), math.pi - abs(s.orientation - w)) for w in want
            )
            assert diff < math.radians(5.0)

    def test_bridge_truth_arg_structure(self):
        spec = SceneSpec(kind="bridge", seed=5, main_angle=0.4)
        _, _, truth = generate_scene(spec)
        kinds = [k for _, k in truth.arg.vertices]
        assert kinds == ["rectangle"] * 4
        conns = sorted(e[2] for e in truth.arg.edges)
        assert conns.count("end-to-end") == 2  # deck joins both approaches

    def test_roundabout_truth_arg_structure(self):
        spec = SceneSpec(kind="roundabout", seed=5, main_angle=0.3)
        _, _, truth = generate_scene(spec)
        kinds = sorted(k for _, k in truth.arg.vertices)
        assert kinds == ["circle"] + ["segment"] * 4
        star = [e for e in truth.arg.edges if 0 in (e[0], e[1])]
        assert len(star) == 4 and all(e[2] == "end-to-side" for e in star)

    def test_clutter_does_not_touch_object(self):
        spec = SceneSpec(kind="roundabout", seed=6, clutter=3, offset=(0, 0))
        pan, _, truth = generate_scene(spec)
        bright = pan.data >= 150
        clutter_px = bright & ~truth.mask.bits
        if clutter_px.any():
            from cartoseg.morph import StructuringElement, dilate
            from cartoseg.raster import BinaryMask

            grown = dilate(BinaryMask(clutter_px), StructuringElement("square", 2))
            assert not (grown.bits & truth.mask.bits).any()


class TestCorpus:
    def test_specs_reproducible(self):
        a = corpus_specs(3, 2, seed=7, noise=4.0, clutter=1)
        b = corpus_specs(3, 2, seed=7, noise=4.0, clutter=1)
        assert a == b
        assert [s.kind for s in a] == ["bridge"] * 3 + ["roundabout"] * 2
        assert all(max(abs(s.offset[0]), abs(s.offset[1])) <= 10 for s in a)

    def test_write_corpus_files_and_manifest(self, tmp_path):
        specs = corpus_specs(1, 1, seed=3)
        manifest = write_corpus(tmp_path, specs)
        assert len(manifest["scenes"]) == 2
        entry = manifest["scenes"][0]
        pan = read_raster(tmp_path / entry["files"]["pan"])
        assert pan.resolution == 2.5
        ms = read_raster(tmp_path / entry["files"]["ms"])
        assert ms.resolution == 10.0
        mask = read_mask(tmp_path / entry["files"]["truth_mask"])
        kind, offset, arg = load_truth(tmp_path / entry["files"]["truth"])
        assert kind == entry["kind"]
        assert list(offset) == entry["offset"]
        assert arg.size >= 4
        assert not mask.is_empty()
        on_disk = json.loads((tmp_path / "manifest.json").read_text())
        assert on_disk == manifest
