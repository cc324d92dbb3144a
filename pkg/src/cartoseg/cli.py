"""Command-line interface.

Subcommands cover every stage individually (synth, segment, edges, match,
extract, model, score, eval) plus the full pipeline.  Exit codes: 0 on
success, 1 for usage errors, 2 for corpus/IO errors, 3 when an exact graph
search exceeds its node budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import graphs, synth
from .edges import canny, from_json as edges_from_json, refine_edges, to_json as edges_to_json
from .matching import match_mask
from .morph import EmptyMask, StructuringElement, external_boundary, prune_spurs, skeletonize
from .pipeline import PipelineConfig, evaluate, run_pipeline
from .raster import FormatError, magnify, read_mask, read_raster, write_raster
from .spectral import (
    EmptyCorpus,
    band_combine,
    corpus_mode_threshold,
    hysteresis_segment,
    keep_central_component,
)
from .watershed import (
    MarkerSet,
    extract_object,
    gradient_magnitude,
    impose_minima,
    inject_edges,
    watershed_flood,
)

USAGE_ERROR, IO_ERROR, BUDGET_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _cmd_synth(a) -> int:
    if a.kind == "mixed":
        n_bridge = a.n // 2
        n_round = a.n - n_bridge
    elif a.kind == "bridge":
        n_bridge, n_round = a.n, 0
    else:
        n_bridge, n_round = 0, a.n
    specs = synth.corpus_specs(
        n_bridge, n_round, seed=a.seed, noise=a.noise, clutter=a.clutter,
        random_offsets=not a.zero_offsets,
    )
    synth.write_corpus(a.out, specs)
    print(f"wrote {len(specs)} scenes to {a.out}")
    return 0


def _cmd_segment(a) -> int:
    paths = sorted(Path(a.ms).glob("*.ppm"))
    if not paths:
        raise EmptyCorpus(f"no .ppm images under {a.ms}")
    images = [read_raster(p) for p in paths]
    t = corpus_mode_threshold(images, delta=a.delta, source=a.source)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for p, ms in zip(paths, images):
        combined = band_combine(magnify(ms, a.factor))
        mask = keep_central_component(hysteresis_segment(combined, t))
        write_raster(mask, out / f"{p.stem}_region.pgm")
    (out / "threshold.txt").write_text(f"t_high={t.t_high:g}\nt_low={t.t_low:g}\n")
    print(f"t_high={t.t_high:g} t_low={t.t_low:g} ({len(paths)} images)")
    return 0


def _cmd_edges(a) -> int:
    pan = read_raster(a.pan)
    es = canny(pan, sigma=a.sigma, high_percentile=a.high_percentile, low_fraction=a.low_fraction)
    if not a.no_refine:
        es = refine_edges(es, merge_dist=a.merge_dist, min_len=a.min_len, smooth_window=a.smooth_window)
    Path(a.out).write_text(edges_to_json(es))
    print(f"{len(es.chains)} chains, {es.total_points()} points -> {a.out}")
    return 0


def _cmd_match(a) -> int:
    mask = read_mask(a.mask)
    pan = read_raster(a.pan)
    es = edges_from_json(Path(a.edges).read_text())
    result = match_mask(mask, es, pan, a.half_window, StructuringElement(a.se_shape, a.se_radius))
    doc = {
        "offset": list(result.offset),
        "score": result.score,
        "variance": result.variance,
        "tie_count": result.tie_count,
        "warning": result.warning,
    }
    text = json.dumps(doc, sort_keys=True)
    if a.out:
        Path(a.out).write_text(text)
    print(text)
    return 0


def _cmd_extract(a) -> int:
    pan = read_raster(a.pan)
    mask = read_mask(a.mask)
    es = edges_from_json(Path(a.edges).read_text())
    skel = skeletonize(mask)
    if a.prune_spurs > 0:
        skel = prune_spurs(skel, a.prune_spurs)
    boundary = external_boundary(mask, StructuringElement(a.se_shape, a.boundary_se_radius))
    markers = MarkerSet(skel, boundary)
    relief = impose_minima(inject_edges(gradient_magnitude(pan), es), markers)
    labels = watershed_flood(relief, markers)
    obj = extract_object(labels, markers)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_raster(obj, out / "object.pgm")
    write_raster(labels.to_display(), out / "labels.pgm")
    print(f"object pixels: {obj.count} -> {out / 'object.pgm'}")
    return 0


def _cmd_model(a) -> int:
    paths = sorted(Path(a.masks).glob("*.pgm"))
    if not paths:
        raise EmptyCorpus(f"no .pgm masks under {a.masks}")
    args = []
    for p in paths:
        mask = read_mask(p)
        prims = graphs.decompose(mask, a.mode, a.resolution)
        args.append(graphs.build_arg(prims, a.adjacency_tol))
    protos = graphs.find_prototypes(args, a.min_support)
    if not protos:
        print("no prototype reached min_support", file=sys.stderr)
        return IO_ERROR
    model = graphs.generate_model(protos, a.node_budget)
    Path(a.out).write_text(graphs.model_to_json(model))
    print(
        f"{len(protos)} prototypes, bounds {model.max_csg.size}/{model.min_csg.size}"
        f" vertices -> {a.out}"
    )
    return 0


def _cmd_score(a) -> int:
    model = graphs.model_from_json(Path(a.model).read_text())
    if a.arg:
        g = graphs.arg_from_json(Path(a.arg).read_text())
    else:
        mask = read_mask(a.mask)
        g = graphs.build_arg(graphs.decompose(mask, a.mode, a.resolution), a.adjacency_tol)
    d = graphs.model_distance(g, model, use_bounds=a.use_bounds, node_budget=a.node_budget)
    print(json.dumps({"distance": d, "vertices": g.size}, sort_keys=True))
    return 0


def _cmd_eval(a) -> int:
    iou, category = evaluate(
        read_mask(a.result), read_mask(a.truth), a.correct, a.acceptable
    )
    print(json.dumps({"iou": iou, "category": category}, sort_keys=True))
    return 0


def _cmd_pipeline(a) -> int:
    cfg = PipelineConfig.from_file(a.config) if a.config else PipelineConfig()
    overrides = {
        f.name: getattr(a, f.name)
        for f in fields(PipelineConfig)
        if getattr(a, f.name, None) is not None
    }
    cfg = cfg.with_overrides(overrides)
    report = run_pipeline(cfg)
    print(report.to_text(), end="")
    return 0


def _build_parser() -> _Parser:
    p = _Parser(prog="cartoseg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[], help="generate a synthetic corpus")
    s.add_argument("--kind", choices=("bridge", "roundabout", "mixed"), default="mixed")
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--clutter", type=int, default=0)
    s.add_argument("--zero-offsets", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("segment", help="threshold + hysteresis on multispectral images")
    s.add_argument("--ms", required=True, help="directory of .ppm images")
    s.add_argument("--delta", type=float, default=10.0)
    s.add_argument("--source", choices=("combined", "ch1"), default="combined")
    s.add_argument("--factor", type=int, default=4)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_segment)

    s = sub.add_parser("edges", help="edge chains from a panchromatic image")
    s.add_argument("--pan", required=True)
    s.add_argument("--sigma", type=float, default=1.2)
    s.add_argument("--high-percentile", type=float, default=90.0)
    s.add_argument("--low-fraction", type=float, default=0.4)
    s.add_argument("--merge-dist", type=float, default=3.0)
    s.add_argument("--min-len", type=float, default=10.0)
    s.add_argument("--smooth-window", type=int, default=3)
    s.add_argument("--no-refine", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_edges)

    s = sub.add_parser("match", help="best integer offset of a mask on the pan image")
    s.add_argument("--mask", required=True)
    s.add_argument("--pan", required=True)
    s.add_argument("--edges", required=True)
    s.add_argument("--half-window", type=int, default=10)
    s.add_argument("--se-shape", choices=("disk", "square"), default="disk")
    s.add_argument("--se-radius", type=int, default=2)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_match)

    s = sub.add_parser("extract", help="marker-controlled watershed extraction")
    s.add_argument("--pan", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--edges", required=True)
    s.add_argument("--se-shape", choices=("disk", "square"), default="disk")
    s.add_argument("--boundary-se-radius", type=int, default=2)
    s.add_argument("--prune-spurs", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_extract)

    s = sub.add_parser("model", help="build a graph model from object masks")
    s.add_argument("--masks", required=True, help="directory of .pgm masks")
    s.add_argument("--mode", choices=("shapes", "skeleton"), default="skeleton")
    s.add_argument("--resolution", type=float, default=2.5)
    s.add_argument("--adjacency-tol", type=float, default=8.0)
    s.add_argument("--min-support", type=int, default=1)
    s.add_argument("--node-budget", type=int, default=graphs.DEFAULT_NODE_BUDGET)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_model)

    s = sub.add_parser("score", help="distance of a shape to a model")
    s.add_argument("--model", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--arg", help="graph JSON file")
    g.add_argument("--mask", help="mask PGM to decompose first")
    s.add_argument("--mode", choices=("shapes", "skeleton"), default="skeleton")
    s.add_argument("--resolution", type=float, default=2.5)
    s.add_argument("--adjacency-tol", type=float, default=8.0)
    s.add_argument("--use-bounds", action="store_true")
    s.add_argument("--node-budget", type=int, default=graphs.DEFAULT_NODE_BUDGET)
    s.set_defaults(func=_cmd_score)

    s = sub.add_parser("eval", help="IoU category of a result against truth")
    s.add_argument("--result", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--correct", type=float, default=0.8)
    s.add_argument("--acceptable", type=float, default=0.5)
    s.set_defaults(func=_cmd_eval)

    s = sub.add_parser("pipeline", help="run every stage over a corpus")
    s.add_argument("--config", help="key=value file; flags below override it")
    for f in fields(PipelineConfig):
        flag = f"--{f.name}"
        if f.type == "bool":
            s.add_argument(flag, type=str, default=None, metavar="BOOL")
        elif f.type == "int":
            s.add_argument(flag, type=int, default=None)
        elif f.type == "float":
            s.add_argument(flag, type=float, default=None)
        else:
            s.add_argument(flag, type=str, default=None)
    s.set_defaults(func=_cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except graphs.BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BUDGET_ERROR
    except (FormatError, EmptyCorpus, FileNotFoundError, NotADirectoryError, EmptyMask) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR
    except (ValueError, synth.SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
