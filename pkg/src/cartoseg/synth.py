"""Deterministic synthetic scenes: paired panchromatic (2.5 m) and
multispectral (10 m) rasters of bridges and roundabouts with ground truth.

The whole scene renders once on a large canvas at panchromatic resolution.
The multispectral image is a box-averaged downsample of that canvas (the
sensor's area integration), so it covers a larger footprint and stays
centered on the object; the panchromatic frame is a central crop whose
window is shifted by the injected offset, which reproduces the bounded
misregistration between the two sources.  Everything derives from the
spec's seed, so identical specs give bit-identical rasters.

Bridges are a main road crossing a river, with a second road running along
the far bank; roundabouts are a ring road around a vegetated island with
four arms.  Building-like clutter rectangles are bright in both sources
and spectrally road-like, placed near but never touching the object.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphs import Arg, Primitive, arg_from_json, arg_to_json, build_arg, make_segment
from .raster import BinaryMask, MultiSpectralImage, ScalarImage, write_raster

KINDS = ("bridge", "roundabout")

# gray levels / channel values.  With the default band weights the combined
# band sits at 90 on roads, ~82 on building clutter (inside the hysteresis
# band: the documented confusion case), ~68 on background and ~46 on water,
# so the weak threshold (mode - 10) cuts mixed border pixels near the
# half-coverage point instead of demanding spectrally pure blocks.
# the river is subtle in the panchromatic band (banks stay below the edge
# thresholds); it is the multispectral signature that separates it
_PAN_BG, _PAN_RIVER, _PAN_CLUTTER, _PAN_ROAD = 80.0, 68.0, 168.0, 172.0
_MS_BG = (150.0, 150.0, 22.0)
_MS_RIVER = (130.0, 130.0, 32.0)
_MS_CLUTTER = (190.0, 190.0, 32.0)
_MS_ROAD = (200.0, 200.0, 30.0)
_TEXTURE_AMPLITUDE = 6.0
_MS_TEXTURE_AMPLITUDE = 4.0
_TEXTURE_CELL = 16
_RIVER_WIDTH_M = 24.0
_CLUTTER_GAP_PX = 6
_SECONDARY_GAP_M = 20.0


class SpecError(Exception):
    """Invalid scene specification."""


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    # roads must stay >= 3 multispectral pixels wide so that arbitrary
    # orientations still leave spectrally pure blocks for the seed threshold
    road_width_m: float = 30.0
    circle_radius_m: float = 32.0      # ring centerline radius (roundabout)
    crossing_angle: float = math.pi / 2  # river direction relative to the main road
    main_angle: float | None = None    # absolute bearing; None draws it from the seed
    offset: tuple[int, int] = (0, 0)   # (dx, dy), panchromatic pixels
    noise: float = 0.0                 # gray-level std of the additive noise
    clutter: int = 0
    seed: int = 0
    pan_size: int = 128
    ms_margin: int = 8                 # extra multispectral pixels per side
    pan_res: float = 2.5
    ms_res: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SpecError(f"unknown scene kind {self.kind!r}")
        if self.road_width_m <= 0 or self.circle_radius_m <= 0:
            raise SpecError("geometry must be positive")
        if self.kind == "roundabout" and self.circle_radius_m <= self.road_width_m / 2:
            raise SpecError("ring radius must exceed half the road width")
        if max(abs(self.offset[0]), abs(self.offset[1])) > 10:
            raise SpecError("offsets are limited to +/-10 pixels")
        if self.noise < 0 or self.clutter < 0:
            raise SpecError("noise and clutter must be non-negative")
        factor = self.ms_res / self.pan_res
        if abs(factor - round(factor)) > 1e-9 or factor < 1:
            raise SpecError("ms resolution must be an integer multiple of pan resolution")
        if self.pan_size % int(round(factor)) != 0:
            raise SpecError("pan size must be divisible by the resolution factor")

    @property
    def factor(self) -> int:
        return int(round(self.ms_res / self.pan_res))


@dataclass(eq=False)
class GroundTruth:
    mask: BinaryMask                 # object mask aligned with the pan frame
    offset: tuple[int, int]
    arg: Arg
    primitives: list[Primitive] = field(default_factory=list)


def _value_noise(rng: np.random.Generator, shape: tuple[int, int], amplitude: float) -> np.ndarray:
    """Smooth low-frequency texture: a coarse random grid, bilinearly upsampled."""
    gh = shape[0] // _TEXTURE_CELL + 2
    gw = shape[1] // _TEXTURE_CELL + 2
    grid = rng.normal(0.0, 1.0, (gh, gw))
    ys = np.arange(shape[0]) / _TEXTURE_CELL
    xs = np.arange(shape[1]) / _TEXTURE_CELL
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g = (
        grid[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + grid[np.ix_(y0, x0 + 1)] * (1 - fy) * fx
        + grid[np.ix_(y0 + 1, x0)] * fy * (1 - fx)
        + grid[np.ix_(y0 + 1, x0 + 1)] * fy * fx
    )
    return amplitude * g


def _bar(yy: np.ndarray, xx: np.ndarray, cx: float, cy: float, angle: float, width: float) -> np.ndarray:
    d = -(xx - cx) * math.sin(angle) + (yy - cy) * math.cos(angle)
    return np.abs(d) <= width / 2.0


def _box_downsample(canvas: np.ndarray, factor: int) -> np.ndarray:
    h, w = canvas.shape
    return canvas.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def _truth_primitives(spec: SceneSpec, main_angle: float) -> list[Primitive]:
    """Analytic primitives in meters, origin at the object center."""
    extent = spec.pan_size * spec.pan_res / 2.0  # frame half-extent
    w = spec.road_width_m
    if spec.kind == "roundabout":
        prims = [Primitive("circle", (0.0, 0.0), radius=spec.circle_radius_m)]
        for k in range(4):
            a = main_angle + k * math.pi / 2.0
            inner = (spec.circle_radius_m * math.cos(a), spec.circle_radius_m * math.sin(a))
            outer = (extent * math.cos(a), extent * math.sin(a))
            prims.append(make_segment(inner, outer))
        return prims
    t1 = main_angle
    tr = main_angle + spec.crossing_angle
    sin_c = abs(math.sin(spec.crossing_angle)) or 1.0
    deck_len = _RIVER_WIDTH_M / sin_c + w
    app_len = max(extent - deck_len / 2.0, w)
    u = (math.cos(t1), math.sin(t1))
    deck = Primitive("rectangle", (0.0, 0.0), width=deck_len, height=w, orientation=t1)
    offs = deck_len / 2.0 + app_len / 2.0
    approaches = [
        Primitive(
            "rectangle",
            (s * offs * u[0], s * offs * u[1]),
            width=app_len,
            height=w,
            orientation=t1,
        )
        for s in (1, -1)
    ]
    d_sec = _RIVER_WIDTH_M / 2.0 + _SECONDARY_GAP_M + w / 2.0
    n_r = (-math.sin(tr), math.cos(tr))
    secondary = Primitive(
        "rectangle",
        (n_r[0] * d_sec, n_r[1] * d_sec),
        width=2.0 * extent,
        height=w,
        orientation=tr,
    )
    return [deck, approaches[0], approaches[1], secondary]


def generate_scene(spec: SceneSpec):
    """Render one scene; returns (pan, ms, truth)."""
    rng = np.random.default_rng(spec.seed)
    main_angle = spec.main_angle if spec.main_angle is not None else float(rng.uniform(0, math.pi))

    factor = spec.factor
    margin = spec.ms_margin * factor
    big = spec.pan_size + 2 * margin
    cy = cx = (big - 1) / 2.0
    yy, xx = np.mgrid[0:big, 0:big].astype(np.float64)
    w_px = spec.road_width_m / spec.pan_res

    river = np.zeros((big, big), dtype=bool)
    island = np.zeros((big, big), dtype=bool)
    if spec.kind == "bridge":
        t1 = main_angle
        tr = main_angle + spec.crossing_angle
        main_road = _bar(yy, xx, cx, cy, t1, w_px)
        river = _bar(yy, xx, cx, cy, tr, _RIVER_WIDTH_M / spec.pan_res)
        d_sec = (_RIVER_WIDTH_M / 2.0 + _SECONDARY_GAP_M + spec.road_width_m / 2.0) / spec.pan_res
        sx = cx - math.sin(tr) * d_sec
        sy = cy + math.cos(tr) * d_sec
        secondary = _bar(yy, xx, sx, sy, tr, w_px)
        obj = main_road | secondary
    else:
        radius_px = spec.circle_radius_m / spec.pan_res
        rr = np.hypot(xx - cx, yy - cy)
        ring = (rr <= radius_px + w_px / 2.0) & (rr >= radius_px - w_px / 2.0)
        island = rr < radius_px - w_px / 2.0
        arms = _bar(yy, xx, cx, cy, main_angle, w_px) | _bar(
            yy, xx, cx, cy, main_angle + math.pi / 2.0, w_px
        )
        obj = ring | (arms & ~island)

    tex_pan = _value_noise(rng, (big, big), _TEXTURE_AMPLITUDE)
    tex_ms_a = _value_noise(rng, (big, big), _MS_TEXTURE_AMPLITUDE)
    tex_ms_b = _value_noise(rng, (big, big), _MS_TEXTURE_AMPLITUDE)

    clutter = np.zeros((big, big), dtype=bool)
    gap = _CLUTTER_GAP_PX
    placed = 0
    attempts = 0
    while placed < spec.clutter and attempts < 50 * max(1, spec.clutter):
        attempts += 1
        cw = int(rng.integers(8, 21))
        ch = int(rng.integers(8, 21))
        x0 = int(rng.integers(margin, big - margin - cw))
        y0 = int(rng.integers(margin, big - margin - ch))
        window = obj[
            max(0, y0 - gap) : y0 + ch + gap, max(0, x0 - gap) : x0 + cw + gap
        ]
        if window.any():
            continue
        clutter[y0 : y0 + ch, x0 : x0 + cw] = True
        placed += 1

    textured = ~(obj | clutter)  # paved surfaces render flat

    # panchromatic canvas
    pan_canvas = np.where(river, _PAN_RIVER, _PAN_BG)
    pan_canvas = np.where(clutter, _PAN_CLUTTER, pan_canvas)
    pan_canvas = np.where(obj, _PAN_ROAD, pan_canvas)
    pan_canvas = pan_canvas + tex_pan * textured

    # multispectral canvas (three channels)
    ms_canvas = []
    for idx in range(3):
        tex = (tex_ms_a, tex_ms_a, tex_ms_b)[idx]
        c = np.where(river, _MS_RIVER[idx], _MS_BG[idx])
        c = np.where(clutter, _MS_CLUTTER[idx], c)
        c = np.where(obj, _MS_ROAD[idx], c)
        ms_canvas.append(c + tex * textured)

    # pan frame: central window shifted against the injected offset
    ox, oy = spec.offset
    y0 = margin - oy
    x0 = margin - ox
    pan = pan_canvas[y0 : y0 + spec.pan_size, x0 : x0 + spec.pan_size].copy()
    truth_bits = obj[y0 : y0 + spec.pan_size, x0 : x0 + spec.pan_size].copy()
    if spec.noise > 0:
        pan += rng.normal(0.0, spec.noise, pan.shape)
    pan_img = ScalarImage(
        np.clip(np.rint(pan), 0, 255).astype(np.uint8), spec.pan_res
    )

    channels = []
    for c in ms_canvas:
        if spec.noise > 0:
            c = c + rng.normal(0.0, spec.noise * 0.3, c.shape)
        down = _box_downsample(c, factor)
        channels.append(
            ScalarImage(np.clip(np.rint(down), 0, 255).astype(np.uint8), spec.ms_res)
        )
    ms_img = MultiSpectralImage(*channels)

    prims = _truth_primitives(spec, main_angle)
    truth = GroundTruth(
        mask=BinaryMask(truth_bits),
        offset=spec.offset,
        arg=build_arg(prims, adjacency_tol=8.0),
        primitives=prims,
    )
    return pan_img, ms_img, truth


# ---------------------------------------------------------------------------
# corpus generation
# ---------------------------------------------------------------------------


def corpus_specs(
    n_bridge: int,
    n_roundabout: int,
    seed: int = 0,
    noise: float = 0.0,
    clutter: int = 0,
    random_offsets: bool = True,
) -> list[SceneSpec]:
    """Reproducible scene specs: per-scene seeds, angles and offsets all
    derive from the master seed."""
    master = np.random.default_rng(seed)
    specs = []
    kinds = ["bridge"] * n_bridge + ["roundabout"] * n_roundabout
    for kind in kinds:
        scene_seed = int(master.integers(0, 2**63 - 1))
        angle = float(master.uniform(0, math.pi))
        if random_offsets:
            off = (int(master.integers(-10, 11)), int(master.integers(-10, 11)))
        else:
            off = (0, 0)
        specs.append(
            SceneSpec(
                kind=kind,
                main_angle=angle,
                offset=off,
                noise=noise,
                clutter=clutter,
                seed=scene_seed,
            )
        )
    return specs


def write_corpus(out_dir, specs: list[SceneSpec]) -> dict:
    """Render and write every scene plus a manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, spec in enumerate(specs):
        sid = f"scene_{i:03d}"
        pan, ms, truth = generate_scene(spec)
        write_raster(pan, out / f"{sid}_pan.pgm")
        write_raster(ms, out / f"{sid}_ms.ppm")
        write_raster(truth.mask, out / f"{sid}_truth.pgm")
        (out / f"{sid}_truth.json").write_text(
            json.dumps(
                {
                    "kind": spec.kind,
                    "offset": list(truth.offset),
                    "seed": spec.seed,
                    "arg": json.loads(arg_to_json(truth.arg)),
                },
                sort_keys=True,
            )
        )
        entries.append(
            {
                "id": sid,
                "kind": spec.kind,
                "offset": list(spec.offset),
                "noise": spec.noise,
                "clutter": spec.clutter,
                "seed": spec.seed,
                "files": {
                    "pan": f"{sid}_pan.pgm",
                    "ms": f"{sid}_ms.ppm",
                    "truth_mask": f"{sid}_truth.pgm",
                    "truth": f"{sid}_truth.json",
                },
            }
        )
    manifest = {"scenes": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def load_truth(path) -> tuple[str, tuple[int, int], Arg]:
    doc = json.loads(Path(path).read_text())
    return doc["kind"], (int(doc["offset"][0]), int(doc["offset"][1])), arg_from_json(doc["arg"])
