"""Command-line interface.

Subcommands: preprocess, slice, ensemble, evaluate, report, split,
loss-check.  Options resolve in the order: explicit flag, then the
``VOXSEG_DATASET_ROOT`` environment variable (dataset root only), then the
``--config`` JSON file, then the builtin default.  Every data-producing
command writes a ``run_manifest.json`` capturing the resolved config and
input hashes; reruns with unchanged inputs produce byte-identical trees.

Exit status is 0 only when every subject succeeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, losses, pipeline, report
from .errors import VoxsegError
from .preprocess import DEFAULT_RGB_ORDER, CropMode
from .volume import Axis

DATASET_ROOT_ENV = "VOXSEG_DATASET_ROOT"
_ALL_AXES = [a.value for a in (Axis.SAGITTAL, Axis.CORONAL, Axis.AXIAL)]


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    doc = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return doc


def _resolve(flag, cfg: dict, key: str, default=None, env: str | None = None):
    if flag is not None:
        return flag
    if env and os.environ.get(env):
        return os.environ[env]
    return cfg.get(key, default)


def _dataset_root(args, cfg: dict) -> Path:
    root = _resolve(args.dataset_root, cfg, "dataset_root", env=DATASET_ROOT_ENV)
    if not root:
        raise SystemExit("no dataset root: pass --dataset-root, set "
                         f"{DATASET_ROOT_ENV}, or put dataset_root in the config")
    return Path(root)


def _axes(args, cfg: dict) -> list[Axis]:
    names = _resolve(args.axes, cfg, "axes", _ALL_AXES)
    return [Axis(n) for n in names]


def _report_failures(failures: list[tuple[str, str]]) -> int:
    for sid, msg in failures:
        print(f"FAILED {sid}: {msg}", file=sys.stderr)
    if failures:
        print(f"{len(failures)} subject(s) failed", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- preprocess


def cmd_preprocess(args) -> int:
    cfg = _load_config(args.config)
    root = _dataset_root(args, cfg)
    out = Path(_resolve(args.out, cfg, "output_root", "preprocessed"))
    axes = _axes(args, cfg)
    rgb_order = tuple(_resolve(args.rgb_order, cfg, "rgb_order", list(DEFAULT_RGB_ORDER)))
    mode = CropMode(_resolve(args.crop_mode, cfg, "crop_mode", CropMode.GLOBAL.value))
    workers = int(_resolve(args.workers, cfg, "workers", 1))

    subjects = pipeline.discover_subjects(root)
    if not subjects:
        print(f"no subjects under {root}", file=sys.stderr)
        return 1

    failures: list[tuple[str, str]] = []
    shared_box = None
    if mode is CropMode.GLOBAL:
        # One pass to union the per-subject boxes, then crop everyone alike.
        boxes = {}

        def _box_task(files: pipeline.SubjectFiles) -> None:
            from .niftio import read_volume
            from .preprocess import compute_crop_box

            vols = [read_volume(p) for p in files.required_modalities().values()]
            if files.seg:
                vols.append(read_volume(files.seg, as_kind="labels"))
            boxes[files.subject_id] = compute_crop_box(vols, CropMode.PER_SUBJECT)

        failures += pipeline.run_subjects(subjects, _box_task, workers)
        if not boxes:
            return _report_failures(failures)
        shared_box = None
        for b in boxes.values():
            shared_box = b if shared_box is None else shared_box.union(b)
        out.mkdir(parents=True, exist_ok=True)
        (out / "crop_global.json").write_text(
            pipeline.canonical_json(pipeline.crop_box_json(shared_box)), "utf-8"
        )

    done_ids = {sid for sid, _ in failures}
    todo = [s for s in subjects if s.subject_id not in done_ids]
    failures += pipeline.run_subjects(
        todo,
        lambda files: pipeline.preprocess_subject(files, out, axes, rgb_order, shared_box),
        workers,
    )

    inputs = [p for s in subjects for p in
              (s.flair, s.t1, s.t1gd, s.seg) if p is not None]
    pipeline.write_run_manifest(
        out,
        "preprocess",
        {
            "dataset_root": str(root),
            "output_root": str(out),
            "axes": [a.value for a in axes],
            "rgb_order": list(rgb_order),
            "crop_mode": mode.value,
            "workers": workers,
        },
        inputs,
    )
    return _report_failures(sorted(set(failures)))


# --------------------------------------------------------------------- slice


def cmd_slice(args) -> int:
    if args.slice_mode == "extract":
        axes = [Axis(n) for n in (args.axes or _ALL_AXES)]
        counts = pipeline.slice_volume_to_files(Path(args.volume), Path(args.out), axes)
        pipeline.write_run_manifest(
            Path(args.out),
            "slice-extract",
            {"volume": str(args.volume), "axes": [a.value for a in axes]},
            [Path(args.volume)],
        )
        for axis_name, n in counts.items():
            print(f"{axis_name}: {n} slices")
        return 0
    pipeline.rebuild_volume_from_files(Path(args.index), Path(args.out))
    print(f"rebuilt {args.out}")
    return 0


# ------------------------------------------------------------------ ensemble


def cmd_ensemble(args) -> int:
    cfg = _load_config(args.config)
    manifest_path = Path(_resolve(args.manifest, cfg, "ensemble_manifest"))
    out = Path(_resolve(args.out, cfg, "output_root", "ensembled"))
    tie_break = pipeline.parse_tie_break(_resolve(args.tie_break, cfg, "tie_break"))
    workers = int(_resolve(args.workers, cfg, "workers", 1))
    fmt = _resolve(args.format, cfg, "volume_format", "mvol")

    subjects = pipeline.load_ensemble_manifest(manifest_path)
    tasks = []
    for s in subjects:
        sid = str(s["id"])
        tasks.append(
            pipeline.EnsembleTask(
                subject_id=sid,
                members=list(s["members"]),
                out_path=out / f"{sid}_vote.{fmt}",
                histogram_path=(out / f"{sid}_histogram.npz") if args.histogram else None,
                tie_break=tie_break,
            )
        )
    out.mkdir(parents=True, exist_ok=True)
    failures = pipeline.run_subjects(tasks, pipeline.ensemble_subject, workers)

    inputs = [manifest_path] + [
        Path(m["path"]) for s in subjects for m in s["members"]
        if Path(m["path"]).is_file()
    ]
    pipeline.write_run_manifest(
        out,
        "ensemble",
        {
            "manifest": str(manifest_path),
            "output_root": str(out),
            "tie_break": [t.name for t in tie_break],
            "histogram": bool(args.histogram),
            "format": fmt,
            "workers": workers,
        },
        inputs,
    )
    return _report_failures(failures)


# ------------------------------------------------------------------ evaluate


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    pairs_path = Path(_resolve(args.pairs, cfg, "eval_pairs"))
    out = Path(_resolve(args.out, cfg, "output_root", "evaluation"))
    workers = int(_resolve(args.workers, cfg, "workers", 1))

    pairs = json.loads(pairs_path.read_text("utf-8"))
    if not isinstance(pairs, list) or not pairs:
        print(f"{pairs_path} must list at least one gt/pred pair", file=sys.stderr)
        return 1

    records: dict[str, pipeline.EvalRecord] = {}

    class _Pair:
        def __init__(self, d):
            self.subject_id = str(d["id"])
            self.gt = Path(d["gt"])
            self.pred = Path(d["pred"])

    def _eval_task(p: _Pair) -> None:
        records[p.subject_id] = pipeline.evaluate_pair(p.subject_id, p.gt, p.pred)

    tasks = [_Pair(d) for d in pairs]
    failures = pipeline.run_subjects(tasks, _eval_task, workers)

    ordered = [records[t.subject_id] for t in tasks if t.subject_id in records]
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text("\n".join(pipeline.metrics_csv_lines(ordered)) + "\n", "utf-8")
    (out / "summary.json").write_text(
        pipeline.canonical_json(pipeline.summarize_records(ordered)), "utf-8"
    )
    inputs = [pairs_path] + [p for t in tasks for p in (t.gt, t.pred) if p.is_file()]
    pipeline.write_run_manifest(
        out,
        "evaluate",
        {"pairs": str(pairs_path), "output_root": str(out), "workers": workers},
        inputs,
    )
    return _report_failures(failures)


# -------------------------------------------------------------------- report


def cmd_report(args) -> int:
    models = json.loads(Path(args.models).read_text("utf-8"))
    rows = [report.ModelSummary.from_json(m) for m in models]
    table = report.build_comparison_table(rows)
    text = report.render_text(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.txt").write_text(text, "utf-8")
        (out / "table.csv").write_text(report.render_csv(table), "utf-8")
        (out / "table.tex").write_text(report.render_latex(table), "utf-8")
        pipeline.write_run_manifest(
            out, "report", {"models": str(args.models)}, [Path(args.models)]
        )
    else:
        print(text, end="")
    return 0


# --------------------------------------------------------------------- split


def cmd_split(args) -> int:
    cfg = _load_config(args.config)
    if args.ids_file:
        ids = [line.strip() for line in Path(args.ids_file).read_text("utf-8").splitlines() if line.strip()]
    else:
        root = _dataset_root(args, cfg)
        ids = [s.subject_id for s in pipeline.discover_subjects(root)]
    ratios = tuple(args.ratios) if args.ratios else (0.6, 0.2, 0.2)
    doc = pipeline.split_subjects(ids, ratios, args.seed)
    out_text = pipeline.canonical_json(doc)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(out_text, "utf-8")
    else:
        print(out_text, end="")
    return 0


# ---------------------------------------------------------------- loss-check


def _loss_instance(args) -> tuple[np.ndarray, np.ndarray]:
    if args.fixture:
        with np.load(args.fixture) as data:
            return np.asarray(data["pred"], dtype=np.float64), np.asarray(data["target"])
    rng = np.random.default_rng(args.seed)
    raw = rng.uniform(0.05, 1.0, size=(args.classes, args.height, args.width))
    pred = raw / raw.sum(axis=0, keepdims=True)
    target = rng.integers(0, args.classes, size=(args.height, args.width))
    return pred, target


def cmd_loss_check(args) -> int:
    pred, target = _loss_instance(args)
    weights = losses.LossWeights(*args.weights)
    result = {
        "cross_entropy": losses.cross_entropy_loss(pred, target),
        "focal": losses.focal_loss(pred, target, args.gamma, args.alpha),
        "dice_per_class_mean": None,
        "combined": losses.combined_mask_loss(
            pred, target, weights, args.gamma, args.alpha, args.eps_smooth
        ),
        "weights": [weights.ce, weights.focal, weights.dice],
        "gamma": args.gamma,
        "alpha": args.alpha,
        "eps_smooth": args.eps_smooth,
    }
    n_classes = pred.shape[0]
    result["dice_per_class_mean"] = sum(
        losses.soft_dice_loss(pred[c], (target == c).astype(float), args.eps_smooth)
        for c in range(n_classes)
    ) / n_classes

    ok = True
    if args.fd:
        rel = losses.gradient_check(
            lambda a: losses.combined_mask_loss(
                a, target, weights, args.gamma, args.alpha, args.eps_smooth
            ),
            lambda a: losses.combined_mask_loss_grad(
                a, target, weights, args.gamma, args.alpha, args.eps_smooth
            ),
            pred,
            args.fd_step,
        )
        result["fd_relative_error"] = rel
        result["fd_tolerance"] = args.tol
        ok = rel < args.tol
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0 if ok else 1


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxseg",
        description="Brain-tumor segmentation pipeline utilities: preprocessing, "
                    "slicing, ensembling, and evaluation around an external 2-D model.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="crop, normalize, RGB-map, and slice a dataset")
    p.add_argument("--config")
    p.add_argument("--dataset-root")
    p.add_argument("--out")
    p.add_argument("--axes", nargs="+", choices=_ALL_AXES)
    p.add_argument("--rgb-order", nargs=3, metavar=("R", "G", "B"))
    p.add_argument("--crop-mode", choices=[m.value for m in CropMode])
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("slice", help="extract label slices to PNGs, or rebuild a volume")
    mode = p.add_subparsers(dest="slice_mode", required=True)
    ext = mode.add_parser("extract", help="volume file -> per-axis PNG slices + index.json")
    ext.add_argument("volume")
    ext.add_argument("--out", required=True)
    ext.add_argument("--axes", nargs="+", choices=_ALL_AXES)
    reb = mode.add_parser("rebuild", help="index.json -> volume file (lossless)")
    reb.add_argument("index")
    reb.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("ensemble", help="majority-vote aligned prediction volumes")
    p.add_argument("--config")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--tie-break", nargs=4, metavar=("FIRST", "SECOND", "THIRD", "LAST"))
    p.add_argument("--histogram", action="store_true", help="also write per-voxel vote counts")
    p.add_argument("--format", choices=["mvol", "nii", "nii.gz"])
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("evaluate", help="Dice and HD95 per subject and region")
    p.add_argument("--config")
    p.add_argument("--pairs", help="JSON list of {id, gt, pred} paths")
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render a model comparison table")
    p.add_argument("--models", required=True, help="JSON list of model summaries")
    p.add_argument("--out", help="directory for table.txt/.csv/.tex; stdout if omitted")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("split", help="deterministic subject-level train/val/test split")
    p.add_argument("--config")
    p.add_argument("--dataset-root")
    p.add_argument("--ids-file", help="newline-separated subject ids")
    p.add_argument("--ratios", nargs=3, type=float, metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("loss-check", help="evaluate the composite loss on a fixture")
    p.add_argument("--fixture", help="npz with arrays 'pred' (C,h,w) and 'target' (h,w)")
    p.add_argument("--seed", type=int, default=0, help="seed for a random instance when no fixture")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--height", type=int, default=6)
    p.add_argument("--width", type=int, default=5)
    p.add_argument("--weights", nargs=3, type=float, default=[1.0, 20.0, 20.0],
                   metavar=("CE", "FOCAL", "DICE"))
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--eps-smooth", type=float, default=1.0)
    p.add_argument("--fd", action="store_true", help="check the gradient by finite differences")
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_loss_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VoxsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
