"""Command-line surface: calibrate, map, select, eval, synth, ablate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import List, Optional

from . import io
from .estimators import ScoreCalibrator
from .evaluation import rank_detections, score_run
from .pipeline import PipelineConfig, run_pipeline
from .postprocess import select_fraction, select_top_k
from .relevance import LikelihoodModel
from .synth import SynthConfig, generate
from .types import TaskList


def _add_map_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-outlier-reject", action="store_true",
                   help="accept every measurement, even all-task-decreasing ones")
    p.add_argument("--no-knn", action="store_true",
                   help="skip per-object statistical floater removal")
    p.add_argument("--no-bayes-update", action="store_true",
                   help="average scores across views instead of recursive fusion")
    p.add_argument("--prune-threshold", type=float, default=0.1,
                   help="drop objects whose best task probability is at or below this")
    p.add_argument("--stop-delta", type=float, default=1e-3,
                   help="stop merging when the cheapest edge exceeds this many nats")
    p.add_argument("--retain-fraction", type=float, default=None,
                   help="alternative stop rule: keep this fraction of task information")
    p.add_argument("--knn-k", type=int, default=8)
    p.add_argument("--knn-alpha", type=float, default=2.0)
    p.add_argument("--depth-tol", type=float, default=0.05,
                   help="absolute depth agreement tolerance in meters")


def _config_from_args(args, model: LikelihoodModel) -> PipelineConfig:
    return PipelineConfig(
        model=model,
        outlier_reject=not args.no_outlier_reject,
        use_bayes_update=not args.no_bayes_update,
        use_knn=not args.no_knn,
        knn_k=args.knn_k,
        knn_alpha=args.knn_alpha,
        prune_threshold=args.prune_threshold,
        stop_delta=args.stop_delta,
        retain_fraction=args.retain_fraction,
        depth_tol=args.depth_tol,
    )


def _cmd_calibrate(args) -> int:
    neg, pos = io.read_calibration(args.samples)
    calib = ScoreCalibrator(
        default_mu_pos=args.mu_pos,
        sigma_eps=args.sigma_eps,
        prior_relevant=args.prior,
    ).fit(neg, pos)
    io.write_likelihood(args.output, calib.model_)
    print(
        f"negative: mean={calib.mu_neg_:.4f} std={calib.sigma_neg_:.4f} "
        f"({len(neg)} samples)"
    )
    if pos is not None:
        print(
            f"positive: mean={calib.mu_pos_:.4f} std={calib.sigma_pos_:.4f} "
            f"({len(pos)} samples)"
        )
    else:
        print(f"positive: mean={calib.mu_pos_:.4f} (default), std mirrors negative")
    print(f"wrote {args.output}")
    return 0


def _cmd_map(args) -> int:
    scene = io.read_scene(args.scene)
    tasks = TaskList(tuple(io.read_tasks(args.tasks)))
    model = io.read_likelihood(args.likelihood) if args.likelihood else LikelihoodModel()
    config = _config_from_args(args, model)
    frames = io.read_observation_log(args.log)
    result = run_pipeline(scene.as_scene(), tasks, frames, config)
    io.write_map(args.output, result.objects)
    print(
        f"{result.n_frames} frames -> {len(result.primitives)} primitives -> "
        f"{result.n_clusters_raw} clusters -> {len(result.objects)} objects"
    )
    print(f"wrote {args.output}")
    return 0


def _cmd_select(args) -> int:
    clusters = io.read_map(args.map)
    if args.fraction is not None:
        chosen = select_fraction(clusters, args.task, args.fraction)
    else:
        chosen = select_top_k(clusters, args.task, args.k)
    doc = {
        "task_index": args.task,
        "selected": [
            {"id": c.id, "probability": float(c.task_dist[args.task])} for c in chosen
        ],
    }
    text = json.dumps(doc, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        print(f"wrote {args.output}")
    else:
        print(text)
    return 0


def _metrics_table(report) -> str:
    return (
        "metric        value\n"
        f"strict_osr    {report.strict_osr:.4f}\n"
        f"relaxed_osr   {report.relaxed_osr:.4f}\n"
        f"mean_iou      {report.mean_iou:.4f}\n"
        f"m_acc         {report.m_acc:.4f}\n"
        f"object_count  {report.object_count}"
    )


def _cmd_eval(args) -> int:
    clusters = io.read_map(args.map)
    gts = io.read_ground_truth(args.truth)
    detections = rank_detections(clusters, gts)
    report = score_run(
        detections,
        gts,
        object_count=len(clusters),
        iou_acc_threshold=args.iou_threshold,
        samples=args.samples,
        seed=args.seed,
    )
    print(_metrics_table(report))
    if args.output:
        io.write_metrics(args.output, report)
        print(f"wrote {args.output}")
    return 0


def _synth_config_from_args(args) -> SynthConfig:
    return SynthConfig(
        n_objects=args.objects,
        gaussians_per_object=args.gaussians,
        object_extent=args.extent,
        scene_extent=args.scene_extent,
        n_frames=args.frames,
        n_tasks=args.tasks,
        mu_neg=args.mu_neg,
        mu_pos=args.mu_pos,
        sigma_eps=args.sigma_eps,
        angle_amp=args.angle_amp,
        outlier_rate=args.outlier_rate,
        n_floaters=args.floaters,
        mask_dilate_px=args.dilate_px,
        emit=args.emit,
        seed=args.seed,
    )


def write_dataset(dataset, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    io.write_scene(os.path.join(outdir, "scene.json"), dataset.scene)
    io.write_tasks(os.path.join(outdir, "tasks.json"), dataset.tasks)
    io.write_observation_log(
        os.path.join(outdir, "observations.jsonl"), dataset.frames
    )
    io.write_ground_truth(
        os.path.join(outdir, "groundtruth.json"), dataset.ground_truth
    )


def _cmd_synth(args) -> int:
    cfg = _synth_config_from_args(args)
    dataset = generate(cfg)
    write_dataset(dataset, args.out)
    n_masks = sum(len(f.masks) for f in dataset.frames)
    print(
        f"{cfg.n_objects} objects, {len(dataset.scene.gaussians)} gaussians, "
        f"{len(dataset.frames)} frames, {n_masks} masks -> {args.out}"
    )
    return 0


_ABLATE_GRID = [
    # (outlier_reject, knn, bayes_update); probability-based extraction always on
    (True, True, True),
    (False, True, True),
    (True, False, True),
    (True, True, False),
    (False, False, True),
    (False, True, False),
    (True, False, False),
    (False, False, False),
]


def _run_ablation(scene, tasks, frames, gts, base: PipelineConfig, samples: int, seed: int):
    rows = []
    for use_or, use_knn, use_bu in _ABLATE_GRID:
        config = replace(
            base,
            outlier_reject=use_or,
            use_knn=use_knn,
            use_bayes_update=use_bu,
        )
        result = run_pipeline(scene, tasks, frames, config)
        detections = rank_detections(result.objects, gts)
        if result.objects:
            report = score_run(
                detections,
                gts,
                object_count=len(result.objects),
                samples=samples,
                seed=seed,
            )
            metrics = (report.strict_osr, report.relaxed_osr, report.mean_iou)
        else:
            metrics = (0.0, 0.0, 0.0)
        rows.append(((use_or, use_knn, use_bu), metrics, len(result.objects)))
    return rows


def format_ablation_table(rows) -> str:
    def mark(flag: bool) -> str:
        return " x " if flag else "   "

    lines = ["OR-phi  kNN  BU   PE  | S-OsR  R-OsR  IoU    Objs"]
    for (use_or, use_knn, use_bu), (s, r, i), n_obj in rows:
        lines.append(
            f"  {mark(use_or)}  {mark(use_knn)} {mark(use_bu)}  x  | "
            f"{s:.3f}  {r:.3f}  {i:.3f}  {n_obj:.1f}"
        )
    return "\n".join(lines)


def _cmd_ablate(args) -> int:
    base = PipelineConfig(
        prune_threshold=args.prune_threshold,
        stop_delta=args.stop_delta,
        retain_fraction=args.retain_fraction,
        knn_k=args.knn_k,
        knn_alpha=args.knn_alpha,
        depth_tol=args.depth_tol,
    )
    if args.dataset:
        bundles = [(
            io.read_scene(os.path.join(args.dataset, "scene.json")).as_scene(),
            io.read_tasks(os.path.join(args.dataset, "tasks.json")),
            list(io.read_observation_log(os.path.join(args.dataset, "observations.jsonl"))),
            io.read_ground_truth(os.path.join(args.dataset, "groundtruth.json")),
        )]
    else:
        bundles = []
        for s in range(args.seeds):
            cfg = replace(_synth_config_from_args(args), seed=args.seed + s)
            d = generate(cfg)
            bundles.append((d.scene.as_scene(), d.tasks, d.frames, d.ground_truth))

    totals = None
    for scene, tasks, frames, gts in bundles:
        rows = _run_ablation(scene, tasks, frames, gts, base, args.samples, args.seed)
        if totals is None:
            totals = [[flags, list(metrics), n_obj] for flags, metrics, n_obj in rows]
        else:
            for acc, (_, metrics, n_obj) in zip(totals, rows):
                acc[1] = [a + b for a, b in zip(acc[1], metrics)]
                acc[2] += n_obj
    n = len(bundles)
    averaged = [
        (flags, tuple(m / n for m in metrics), n_obj / n)
        for flags, metrics, n_obj in totals
    ]
    print(f"ablation over {n} dataset(s); probability-based extraction (PE) fixed on")
    print(format_ablation_table(averaged))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskmap",
        description="Task-driven semantic object mapping for Gaussian-splat scenes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit the score likelihood model from samples")
    p.add_argument("samples", help="calibration-sample JSON file")
    p.add_argument("-o", "--output", required=True, help="likelihood file to write")
    p.add_argument("--mu-pos", type=float, default=0.27,
                   help="positive-class mean used when no positive samples are given")
    p.add_argument("--sigma-eps", type=float, default=0.0)
    p.add_argument("--prior", type=float, default=0.05)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("map", help="build the object map from an observation log")
    p.add_argument("--scene", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--likelihood", default=None)
    p.add_argument("-o", "--output", required=True)
    _add_map_flags(p)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("select", help="query a map for a task's most relevant objects")
    p.add_argument("--map", required=True)
    p.add_argument("--task", type=int, required=True)
    p.add_argument("-k", type=int, default=1)
    p.add_argument("--fraction", type=float, default=None,
                   help="select all objects within this fraction of the best probability")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("eval", help="score a map against ground truth")
    p.add_argument("--map", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--iou-threshold", type=float, default=0.25)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    def add_synth_args(p):
        p.add_argument("--objects", type=int, default=5)
        p.add_argument("--gaussians", type=int, default=60)
        p.add_argument("--extent", type=float, default=0.15)
        p.add_argument("--scene-extent", type=float, default=4.0)
        p.add_argument("--frames", type=int, default=30)
        p.add_argument("--tasks", type=int, default=None)
        p.add_argument("--mu-neg", type=float, default=0.20)
        p.add_argument("--mu-pos", type=float, default=0.27)
        p.add_argument("--sigma-eps", type=float, default=0.0)
        p.add_argument("--angle-amp", type=float, default=0.0)
        p.add_argument("--outlier-rate", type=float, default=0.0)
        p.add_argument("--floaters", type=int, default=0)
        p.add_argument("--dilate-px", type=int, default=0)
        p.add_argument("--emit", choices=("geometric", "precomputed"),
                       default="geometric")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    add_synth_args(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ablate", help="run the component-ablation grid and print a table")
    p.add_argument("--dataset", default=None,
                   help="existing synth dataset directory (otherwise generated)")
    p.add_argument("--seeds", type=int, default=1,
                   help="number of generated datasets to average over")
    p.add_argument("--samples", type=int, default=50_000)
    add_synth_args(p)
    _add_map_flags(p)
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (io.SchemaError, ValueError, KeyError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
