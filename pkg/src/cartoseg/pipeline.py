"""End-to-end orchestration: segmentation, matching, extraction, models.

The pipeline consumes a corpus directory written by the scene generator
(manifest plus per-scene rasters and ground truth), runs the three imaging
stages on every scene, scores each stage against the truth mask with an
intersection-over-union category scheme, optionally builds per-kind graph
models from the extracted shapes, and writes a JSON report plus a plain
text table of category counts per stage.

Per-scene failures are recorded in the report and never abort the batch.
Scenes are processed in manifest-id order so reports are byte-identical
across runs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import graphs
from .edges import canny, refine_edges, to_json as edges_to_json
from .matching import match_mask
from .morph import StructuringElement, dilate, external_boundary, prune_spurs, skeletonize
from .raster import (
    BinaryMask,
    ScalarImage,
    clip_center,
    magnify,
    read_mask,
    read_raster,
    translate,
    write_raster,
)
from .spectral import (
    ThresholdPair,
    band_combine,
    corpus_mode_threshold,
    hysteresis_segment,
    keep_central_component,
)
from .synth import load_truth
from .watershed import (
    MarkerSet,
    extract_object,
    gradient_magnitude,
    impose_minima,
    inject_edges,
    watershed_flood,
)

STAGES = ("segment", "match", "extract")
CATEGORIES = ("correct", "acceptable", "incorrect")


@dataclass
class PipelineConfig:
    """Every knob of the pipeline; all keys can come from a key=value file
    and every key is overridable by a CLI flag of the same name."""

    corpus: str = "corpus"
    out: str = "out"
    delta: float = 10.0
    threshold_source: str = "combined"  # or "ch1"
    band_w1: float = 0.3
    band_w2: float = 0.3
    band_w3: float = -1.0
    canny_sigma: float = 1.2
    canny_high_percentile: float = 95.0
    canny_low_fraction: float = 0.4
    smooth_window: int = 3
    merge_dist: float = 3.0
    min_edge_len: float = 10.0
    half_window: int = 10
    se_shape: str = "disk"
    match_se_radius: int = 1
    boundary_se_radius: int = 2
    prune_spurs: int = 0
    decompose_mode: str = "skeleton"
    adjacency_tol: float = 8.0
    min_support: int = 1
    iou_correct: float = 0.8
    iou_acceptable: float = 0.5
    distance_mode: str = "prototypes"  # or "bounds"
    node_budget: int = 1_000_000
    build_models: bool = True
    save_intermediates: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.iou_acceptable <= 1.0 and 0.0 < self.iou_correct <= 1.0):
            raise ValueError("IoU thresholds must lie in (0, 1]")
        if self.iou_correct < self.iou_acceptable:
            raise ValueError("correct threshold must be >= acceptable threshold")
        if self.distance_mode not in ("prototypes", "bounds"):
            raise ValueError(f"unknown distance mode {self.distance_mode!r}")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        values = {}
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
        return cls().with_overrides(values)

    def with_overrides(self, values: dict) -> "PipelineConfig":
        by_name = {f.name: f for f in fields(self)}
        current = asdict(self)
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in by_name:
                raise ValueError(f"unknown config key {key!r}")
            ftype = by_name[key].type
            if isinstance(raw, str):
                if ftype == "bool":
                    raw = raw.lower() in ("1", "true", "yes", "on")
                elif ftype == "int":
                    raw = int(raw)
                elif ftype == "float":
                    raw = float(raw)
            current[key] = raw
        return PipelineConfig(**current)


def evaluate(
    result: BinaryMask,
    truth: BinaryMask,
    correct: float = 0.8,
    acceptable: float = 0.5,
) -> tuple[float, str]:
    """Intersection-over-union and its category; two empty masks compare
    as a degenerate perfect match."""
    if result.bits.shape != truth.bits.shape:
        raise ValueError("masks must share dimensions")
    union = int(np.count_nonzero(result.bits | truth.bits))
    if union == 0:
        return 1.0, "correct"
    inter = int(np.count_nonzero(result.bits & truth.bits))
    iou = inter / union
    if iou >= correct:
        return iou, "correct"
    if iou >= acceptable:
        return iou, "acceptable"
    return iou, "incorrect"


@dataclass(eq=False)
class EvalReport:
    scenes: list[dict]
    aggregate: dict
    threshold: dict
    models: dict
    config: dict

    def to_dict(self) -> dict:
        return {
            "scenes": self.scenes,
            "aggregate": self.aggregate,
            "threshold": self.threshold,
            "models": self.models,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        """Category counts per stage and object kind, one table."""
        kinds = sorted({s["kind"] for s in self.scenes})
        lines = [
            f"{'Step':<10}{'Object':<14}{'Correct':>9}{'Acceptable':>12}{'Incorrect':>11}"
        ]
        names = {"segment": "Segm.", "match": "Match.", "extract": "Extract."}
        for stage in STAGES:
            for i, kind in enumerate(kinds):
                counts = self.aggregate[stage][kind]
                lines.append(
                    f"{names[stage] if i == 0 else '':<10}{kind:<14}"
                    f"{counts['correct']:>9}{counts['acceptable']:>12}{counts['incorrect']:>11}"
                )
        return "\n".join(lines) + "\n"


def _stage_counts(scenes: list[dict]) -> dict:
    """Aggregate counts; scenes that failed before a stage count as
    incorrect there so every stage sums to the corpus size."""
    kinds = sorted({s["kind"] for s in scenes})
    agg = {
        stage: {kind: {c: 0 for c in CATEGORIES} for kind in kinds} for stage in STAGES
    }
    for s in scenes:
        for stage in STAGES:
            cat = s["stages"].get(stage, {}).get("category", "incorrect")
            agg[stage][s["kind"]][cat] += 1
    return agg


def _se(cfg: PipelineConfig, radius: int) -> StructuringElement:
    return StructuringElement(cfg.se_shape, radius)


def run_scene(
    pan: ScalarImage,
    ms,
    truth_mask: BinaryMask,
    truth_offset: tuple[int, int],
    t: ThresholdPair,
    cfg: PipelineConfig,
    out_dir: Path | None = None,
    sid: str = "scene",
) -> dict:
    """All imaging stages for one scene; returns the per-scene record."""
    record: dict = {"stages": {}}
    weights = (cfg.band_w1, cfg.band_w2, cfg.band_w3)
    factor = max(1, int(round(ms.resolution / pan.resolution)))

    def save(img, name):
        if out_dir is not None and cfg.save_intermediates:
            write_raster(img, out_dir / f"{sid}_{name}.pgm")

    # segmentation of the multispectral clip
    ms_clip = clip_center(ms, pan.width // factor, pan.height // factor)
    combined = band_combine(magnify(ms_clip, factor), weights)
    region = hysteresis_segment(combined, t)
    mask = keep_central_component(region)
    save(region, "region")
    save(mask, "mask")
    if mask.is_empty():
        record["error"] = "segmentation produced an empty mask"
        record["failed_stage"] = "segment"
        return record
    iou, cat = evaluate(
        translate(mask, *truth_offset), truth_mask, cfg.iou_correct, cfg.iou_acceptable
    )
    record["stages"]["segment"] = {"iou": round(iou, 6), "category": cat}

    # edges + placement
    es = refine_edges(
        canny(
            pan,
            sigma=cfg.canny_sigma,
            high_percentile=cfg.canny_high_percentile,
            low_fraction=cfg.canny_low_fraction,
        ),
        merge_dist=cfg.merge_dist,
        min_len=cfg.min_edge_len,
        smooth_window=cfg.smooth_window,
    )
    if out_dir is not None and cfg.save_intermediates:
        (out_dir / f"{sid}_edges.json").write_text(edges_to_json(es))
    result = match_mask(mask, es, pan, cfg.half_window, _se(cfg, cfg.match_se_radius))
    matched = translate(mask, *result.offset)
    iou, cat = evaluate(matched, truth_mask, cfg.iou_correct, cfg.iou_acceptable)
    record["stages"]["match"] = {
        "iou": round(iou, 6),
        "category": cat,
        "offset": list(result.offset),
        "score": result.score,
        "tie_count": result.tie_count,
    }
    save(matched, "matched")
    if matched.is_empty():
        record["error"] = "matched mask left the frame"
        record["failed_stage"] = "extract"
        return record

    # watershed extraction
    skel = skeletonize(matched)
    if cfg.prune_spurs > 0:
        skel = prune_spurs(skel, cfg.prune_spurs)
    if skel.is_empty():
        record["error"] = "empty skeleton marker"
        record["failed_stage"] = "extract"
        return record
    boundary = external_boundary(matched, _se(cfg, cfg.boundary_se_radius))
    markers = MarkerSet(object_marker=skel, background_marker=boundary)
    relief = impose_minima(inject_edges(gradient_magnitude(pan), es), markers)
    labels = watershed_flood(relief, markers)
    obj = extract_object(labels, markers)
    iou, cat = evaluate(obj, truth_mask, cfg.iou_correct, cfg.iou_acceptable)
    record["stages"]["extract"] = {"iou": round(iou, 6), "category": cat}
    save(skel, "skeleton")
    save(boundary, "boundary")
    save(labels.to_display(), "labels")
    save(obj, "object")
    if out_dir is not None and cfg.save_intermediates:
        overlay = pan.data.copy()
        if not obj.is_empty():
            rim = dilate(obj, StructuringElement("square", 1)).bits & ~obj.bits
            overlay = np.where(rim, 255, overlay).astype(np.uint8)
        save(ScalarImage(overlay, pan.resolution), "overlay")
    record["extracted"] = obj
    return record


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    corpus = Path(cfg.corpus)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = json.loads((corpus / "manifest.json").read_text())
    entries = sorted(manifest["scenes"], key=lambda e: e["id"])

    # corpus-level threshold over every readable multispectral image
    loaded: dict[str, tuple] = {}
    ms_for_threshold = []
    for entry in entries:
        try:
            pan = read_raster(corpus / entry["files"]["pan"])
            ms = read_raster(corpus / entry["files"]["ms"])
            truth_mask = read_mask(corpus / entry["files"]["truth_mask"])
            kind, offset, truth_arg = load_truth(corpus / entry["files"]["truth"])
            factor = max(1, int(round(ms.resolution / pan.resolution)))
            ms_for_threshold.append(
                clip_center(ms, pan.width // factor, pan.height // factor)
            )
            loaded[entry["id"]] = (pan, ms, truth_mask, offset, truth_arg)
        except Exception as exc:  # noqa: BLE001 - per-scene isolation
            loaded[entry["id"]] = ("error", f"load failed: {exc}")
    threshold = corpus_mode_threshold(
        ms_for_threshold,
        delta=cfg.delta,
        source=cfg.threshold_source,
        weights=(cfg.band_w1, cfg.band_w2, cfg.band_w3),
    )

    scenes: list[dict] = []
    extracted_by_kind: dict[str, list] = {}
    for entry in entries:
        sid = entry["id"]
        record: dict = {"id": sid, "kind": entry["kind"], "stages": {}}
        data = loaded[sid]
        if data[0] == "error":
            record["error"] = data[1]
            record["failed_stage"] = "load"
            scenes.append(record)
            continue
        pan, ms, truth_mask, offset, _ = data
        try:
            result = run_scene(pan, ms, truth_mask, offset, threshold, cfg, out_dir, sid)
        except Exception as exc:  # noqa: BLE001 - per-scene isolation
            record["error"] = f"{type(exc).__name__}: {exc}"
            record["failed_stage"] = "pipeline"
            scenes.append(record)
            continue
        obj = result.pop("extracted", None)
        record.update(result)
        if obj is not None and not obj.is_empty():
            extracted_by_kind.setdefault(entry["kind"], []).append((sid, obj, pan.resolution))
        scenes.append(record)

    models: dict = {}
    if cfg.build_models:
        for kind in sorted(extracted_by_kind):
            items = extracted_by_kind[kind]
            try:
                args = [
                    (sid, graphs.build_arg(
                        graphs.decompose(obj, cfg.decompose_mode, resolution),
                        cfg.adjacency_tol,
                    ))
                    for sid, obj, resolution in items
                ]
                protos = graphs.find_prototypes([g for _, g in args], cfg.min_support)
                if not protos:
                    models[kind] = {"error": "no prototype reached min_support"}
                    continue
                model = graphs.generate_model(protos, cfg.node_budget)
                distances = {
                    sid: round(
                        graphs.model_distance(
                            g, model, cfg.distance_mode == "bounds", cfg.node_budget
                        ),
                        6,
                    )
                    for sid, g in args
                }
                models[kind] = {
                    "prototypes": len(model.prototypes),
                    "max_csg_size": model.max_csg.size,
                    "min_csg_size": model.min_csg.size,
                    "distances": distances,
                }
                (out_dir / f"model_{kind}.json").write_text(graphs.model_to_json(model))
            except graphs.BudgetExceeded as exc:
                models[kind] = {"error": str(exc)}

    report = EvalReport(
        scenes=scenes,
        aggregate=_stage_counts(scenes),
        threshold={"t_high": threshold.t_high, "t_low": threshold.t_low},
        models=models,
        config=asdict(cfg),
    )
    (out_dir / "report.json").write_text(report.to_json())
    (out_dir / "report.txt").write_text(report.to_text())
    return report
