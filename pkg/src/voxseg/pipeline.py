"""Batch orchestration: subject discovery, per-subject work units, and
reproducibility manifests.  The CLI is a thin argparse shell over this.

Conventions
-----------
* A dataset root contains one directory per subject; modality files are
  recognized by name: ``*flair*`` -> FLAIR, ``*t1gd*``/``*t1ce*`` -> T1-GD,
  remaining ``*t1*`` -> T1, ``*t2*`` -> T2 (ignored downstream), ``*seg*``
  -> ground-truth labels.  Extensions: .nii, .nii.gz, .mvol.
* Every command writes ``run_manifest.json`` next to its outputs: resolved
  config, a sha256 over the canonical config JSON, sha256 of every input
  file, and library versions.  No timestamps, so reruns are byte-identical.
* Failures are isolated per subject: the run continues and the caller gets
  a list of (subject, error) pairs; the CLI exits nonzero if any exist.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__, _accel
from .augment import AugmentPolicy
from .ensemble import DEFAULT_TIE_BREAK, EnsembleSet, MemberInfo, majority_vote, vote_histogram
from .errors import VoxsegError
from .metrics import RegionMetrics, evaluate_subject
from .niftio import read_volume, write_volume
from .pngio import load_mask_png, save_mask_png, save_rgb_png
from .preprocess import (
    DEFAULT_RGB_ORDER,
    CropBox,
    CropMode,
    apply_crop,
    compute_crop_box,
    map_channels_rgb,
    normalize_minmax,
)
from .volume import Axis, Label, SlicePack, Volume, extract_slices, reassemble

VOLUME_SUFFIXES = (".nii", ".nii.gz", ".mvol")


@dataclass
class SubjectFiles:
    subject_id: str
    flair: Path | None = None
    t1: Path | None = None
    t1gd: Path | None = None
    t2: Path | None = None
    seg: Path | None = None

    def required_modalities(self) -> dict[str, Path]:
        missing = [n for n in ("flair", "t1", "t1gd") if getattr(self, n) is None]
        if missing:
            raise FileNotFoundError(
                f"subject {self.subject_id}: missing modality file(s) {', '.join(missing)}"
            )
        return {"flair": self.flair, "t1": self.t1, "t1gd": self.t1gd}


def _is_volume_file(p: Path) -> bool:
    return p.is_file() and p.name.endswith(VOLUME_SUFFIXES)


def classify_subject_files(subject_id: str, files: Iterable[Path]) -> SubjectFiles:
    """Assign files to modalities by name; t1gd is matched before t1."""
    out = SubjectFiles(subject_id)
    for p in sorted(files):
        stem = p.name.lower()
        if "seg" in stem:
            out.seg = p
        elif "flair" in stem:
            out.flair = p
        elif "t1gd" in stem or "t1ce" in stem or "t1-gd" in stem:
            out.t1gd = p
        elif "t1" in stem:
            out.t1 = p
        elif "t2" in stem:
            out.t2 = p
    return out


def discover_subjects(dataset_root: Path) -> list[SubjectFiles]:
    """One SubjectFiles per subdirectory holding at least one volume file."""
    if not dataset_root.is_dir():
        raise NotADirectoryError(f"dataset root {dataset_root} is not a directory")
    subjects = []
    for sub in sorted(p for p in dataset_root.iterdir() if p.is_dir()):
        vols = [p for p in sub.iterdir() if _is_volume_file(p)]
        if vols:
            subjects.append(classify_subject_files(sub.name, vols))
    return subjects


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_run_manifest(out_dir: Path, command: str, config: dict, inputs: Sequence[Path]) -> None:
    config_text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    manifest = {
        "command": command,
        "config": config,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "inputs": {str(p): sha256_file(p) for p in sorted(set(inputs))},
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "kernel_backend": _accel.backend(),
        },
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_manifest.json").write_text(canonical_json(manifest), "utf-8")


def run_subjects(
    tasks: Sequence,
    worker: Callable,
    workers: int,
) -> list[tuple[str, str]]:
    """Run per-subject work units, isolating failures.

    Returns (subject_id, error message) for every failed unit.  Work units
    must write to disjoint paths so the outcome is scheduling-independent.
    """
    failures: list[tuple[str, str]] = []

    def guarded(task):
        sid = getattr(task, "subject_id", None) or str(task)
        try:
            worker(task)
            return None
        except (VoxsegError, OSError, ValueError) as exc:
            return (sid, f"{type(exc).__name__}: {exc}")

    if workers <= 1:
        results = map(guarded, tasks)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(guarded, tasks))
    failures.extend(r for r in results if r is not None)
    return sorted(failures)


# ---------------------------------------------------------------- preprocess


@dataclass
class PreprocessResult:
    subject_id: str
    crop_box: CropBox
    slice_counts: dict[str, int] = field(default_factory=dict)


def crop_box_json(box: CropBox) -> dict:
    return {"x": list(box.x), "y": list(box.y), "z": list(box.z)}


def crop_box_from_json(d: dict) -> CropBox:
    return CropBox(tuple(d["x"]), tuple(d["y"]), tuple(d["z"]))


def preprocess_subject(
    files: SubjectFiles,
    out_dir: Path,
    axes: Sequence[Axis],
    rgb_order: tuple[str, str, str] = DEFAULT_RGB_ORDER,
    crop_box: CropBox | None = None,
) -> PreprocessResult:
    """Crop, normalize, RGB-map, and slice one subject.

    Emits, under ``out_dir/<subject>/<axis>/``: ``slice_NNNN.png`` images,
    ``mask_NNNN.png`` labels when ground truth exists, and ``index.json``
    recording positions for lossless inverse mapping.  The crop box
    (computed per subject when not supplied) lands in ``crop.json``.
    """
    paths = files.required_modalities()
    vols = {name: read_volume(p) for name, p in paths.items()}
    for name, v in vols.items():
        if not isinstance(v, Volume):
            raise TypeError(f"{paths[name]} holds labels, expected image data")
    seg = read_volume(files.seg, as_kind="labels") if files.seg else None

    considered = list(vols.values()) + ([seg] if seg is not None else [])
    box = crop_box or compute_crop_box(considered, CropMode.PER_SUBJECT)
    cropped = {n: normalize_minmax(apply_crop(v, box)) for n, v in vols.items()}
    seg_c = apply_crop(seg, box) if seg is not None else None

    sub_dir = out_dir / files.subject_id
    sub_dir.mkdir(parents=True, exist_ok=True)
    (sub_dir / "crop.json").write_text(canonical_json(crop_box_json(box)), "utf-8")

    result = PreprocessResult(files.subject_id, box)
    for axis in axes:
        slices = map_channels_rgb(
            cropped["flair"], cropped["t1"], cropped["t1gd"], axis, rgb_order
        )
        axis_dir = sub_dir / axis.value
        axis_dir.mkdir(parents=True, exist_ok=True)
        mask_pack = extract_slices(seg_c, axis) if seg_c is not None else None
        entries = []
        for sl in slices:
            img_name = f"slice_{sl.index:04d}.png"
            save_rgb_png(sl, axis_dir / img_name)
            entry = {"index": sl.index, "image": img_name}
            if mask_pack is not None:
                mask_name = f"mask_{sl.index:04d}.png"
                save_mask_png(mask_pack.slices[sl.index], axis_dir / mask_name)
                entry["mask"] = mask_name
            entries.append(entry)
        index = {
            "subject": files.subject_id,
            "axis": axis.value,
            "origin_dims": list(cropped["flair"].data.shape),
            "spacing": list(cropped["flair"].spacing),
            "rgb_order": list(rgb_order),
            "crop_box": crop_box_json(box),
            "slices": entries,
        }
        (axis_dir / "index.json").write_text(canonical_json(index), "utf-8")
        result.slice_counts[axis.value] = len(entries)
    return result


# --------------------------------------------------------------------- slice


def slice_volume_to_files(vol_path: Path, out_dir: Path, axes: Sequence[Axis]) -> dict[str, int]:
    """Extract 2-D mask slices from a label volume into PNG files + index."""
    vol = read_volume(vol_path, as_kind="labels")
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = {}
    for axis in axes:
        pack = extract_slices(vol, axis)
        axis_dir = out_dir / axis.value
        axis_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for idx in pack.indices:
            name = f"mask_{idx:04d}.png"
            save_mask_png(pack.slices[idx], axis_dir / name)
            entries.append({"index": idx, "mask": name})
        index = {
            "axis": axis.value,
            "grid_axis": pack.grid_axis,
            "origin_dims": list(pack.origin_dims),
            "spacing": list(pack.spacing),
            "kind": pack.kind,
            "tag": pack.tag,
            "slices": entries,
        }
        (axis_dir / "index.json").write_text(canonical_json(index), "utf-8")
        counts[axis.value] = len(entries)
    return counts


def rebuild_volume_from_files(index_path: Path, out_path: Path) -> None:
    """Inverse of slice_volume_to_files for one axis directory."""
    index = json.loads(index_path.read_text("utf-8"))
    axis_dir = index_path.parent
    entries = sorted(index["slices"], key=lambda e: int(e["index"]))
    pack = SlicePack(
        axis=Axis(index["axis"]),
        grid_axis=int(index["grid_axis"]),
        origin_dims=tuple(index["origin_dims"]),
        spacing=tuple(index["spacing"]),
        slices=tuple(load_mask_png(axis_dir / e["mask"]) for e in entries),
        indices=tuple(int(e["index"]) for e in entries),
        kind=index.get("kind", "labels"),
        tag=index.get("tag", ""),
    )
    write_volume(reassemble(pack), out_path)


# ------------------------------------------------------------------ ensemble


@dataclass
class EnsembleTask:
    subject_id: str
    members: list[dict]
    out_path: Path
    histogram_path: Path | None
    tie_break: tuple[Label, ...]


def load_ensemble_manifest(path: Path) -> list[dict]:
    doc = json.loads(path.read_text("utf-8"))
    subjects = doc["subjects"] if isinstance(doc, dict) else doc
    if not isinstance(subjects, list) or not subjects:
        raise ValueError(f"{path}: manifest must list at least one subject")
    return subjects


def ensemble_subject(task: EnsembleTask) -> None:
    members, prov = [], []
    for m in task.members:
        vol = read_volume(Path(m["path"]), as_kind="labels")
        members.append(vol)
        prov.append(MemberInfo(model=str(m.get("model", "")), axis=str(m.get("axis", ""))))
    es = EnsembleSet(members, prov)
    voted = majority_vote(es, task.tie_break)
    task.out_path.parent.mkdir(parents=True, exist_ok=True)
    write_volume(voted, task.out_path)
    if task.histogram_path is not None:
        np.savez_compressed(task.histogram_path, counts=vote_histogram(es))


def parse_tie_break(names: Sequence[str] | None) -> tuple[Label, ...]:
    if not names:
        return DEFAULT_TIE_BREAK
    lut = {"else": Label.ELSE, "ncr": Label.NCR, "ed": Label.ED, "et": Label.ET}
    try:
        return tuple(lut[n.lower()] for n in names)
    except KeyError as exc:
        raise ValueError(f"unknown label {exc.args[0]!r} in tie-break order") from None


# ------------------------------------------------------------------ evaluate


@dataclass
class EvalRecord:
    subject_id: str
    metrics: list[RegionMetrics]


def evaluate_pair(subject_id: str, gt_path: Path, pred_path: Path) -> EvalRecord:
    gt = read_volume(gt_path, as_kind="labels")
    pred = read_volume(pred_path, as_kind="labels")
    return EvalRecord(subject_id, evaluate_subject(gt, pred))


def metrics_csv_lines(records: Sequence[EvalRecord]) -> list[str]:
    lines = ["subject_id,region,dice,hd95,flags"]
    for rec in records:
        for m in rec.metrics:
            hd = "" if m.hd95 is None else format(m.hd95, ".9g")
            lines.append(f"{rec.subject_id},{m.region.name},{m.dice:.9g},{hd},{m.flag}")
    return lines


def summarize_records(records: Sequence[EvalRecord]) -> dict:
    """Aggregate means per region; undefined HD95 values are excluded and
    counted, matching the documented empty-mask policy."""
    summary: dict = {"n_subjects": len(records), "regions": {}, "percentile": "linear"}
    for region in ("TC", "WT", "ET"):
        rows = [m for rec in records for m in rec.metrics if m.region.name == region]
        dices = [m.dice for m in rows]
        hds = [m.hd95 for m in rows if m.hd95 is not None]
        summary["regions"][region] = {
            "mean_dice": float(np.mean(dices)) if dices else None,
            "mean_hd95": float(np.mean(hds)) if hds else None,
            "n_hd95_undefined": sum(1 for m in rows if m.hd95 is None),
            "n_flagged": sum(1 for m in rows if m.flag),
        }
    return summary


# --------------------------------------------------------------------- split


def split_subjects(
    ids: Sequence[str], ratios: tuple[float, float, float] = (0.6, 0.2, 0.2), seed: int = 0
) -> dict:
    """Deterministic seeded subject-level split (never slice-level).

    Sizes are floor(n * ratio) for train and val; the remainder is test.
    """
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be nonnegative and sum to 1, got {ratios}")
    unique = sorted(set(ids))
    if not unique:
        raise ValueError("no subject ids to split")
    order = np.random.default_rng(seed).permutation(len(unique))
    shuffled = [unique[i] for i in order]
    n_train = int(len(shuffled) * ratios[0])
    n_val = int(len(shuffled) * ratios[1])
    return {
        "seed": seed,
        "ratios": list(ratios),
        "train": sorted(shuffled[:n_train]),
        "val": sorted(shuffled[n_train : n_train + n_val]),
        "test": sorted(shuffled[n_train + n_val :]),
    }


def policy_from_config(doc: dict) -> AugmentPolicy:
    return AugmentPolicy.from_json(doc)
