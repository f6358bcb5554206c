"""Time-budgeted fuzz harness for the volume readers.

Strategy: start from valid files produced by the writer, then mutate them
(byte flips, truncation, header-field edits, random garbage, compressed
garbage, JSON mutations) and feed them to ``read_volume``.  A case passes
when the reader returns a volume or raises a controlled error; it fails on
any other exception, which includes MemoryError: the readers must never
size an allocation from an unchecked header field.
"""

from __future__ import annotations

import gzip
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from voxseg import LabelVolume, Modality, Volume, VoxsegError, read_volume, write_volume

CONTROLLED = (VoxsegError, OSError, ValueError, KeyError)


@dataclass
class FuzzReport:
    cases: int = 0
    outcomes: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def record(self, kind: str, exc: BaseException | None, path: Path, blob: bytes):
        self.cases += 1
        name = "ok" if exc is None else type(exc).__name__
        self.outcomes[name] = self.outcomes.get(name, 0) + 1
        if exc is not None and not isinstance(exc, CONTROLLED):
            self.failures.append((kind, type(exc).__name__, str(exc), blob[:120].hex()))


def _seed_files(tmp: Path, rng: np.random.Generator) -> list[Path]:
    paths = []
    vol = Volume(rng.random((6, 5, 4), dtype=np.float32), spacing=(1, 1.5, 2), modality=Modality.T1)
    lab = LabelVolume(rng.choice(np.array([0, 1, 2, 4], dtype=np.uint8), size=(4, 4, 4)))
    for name, v in [("img.nii", vol), ("img.nii.gz", vol), ("img.mvol", vol),
                    ("lab.nii", lab), ("lab.nii.gz", lab), ("lab.mvol", lab)]:
        p = tmp / name
        write_volume(v, p)
        paths.append(p)
    return paths


def _mutate_bytes(blob: bytes, rng: np.random.Generator) -> bytes:
    arr = bytearray(blob)
    choice = rng.integers(0, 5)
    if choice == 0 and arr:  # flip random bytes
        for _ in range(int(rng.integers(1, 16))):
            arr[int(rng.integers(0, len(arr)))] = int(rng.integers(0, 256))
    elif choice == 1:  # truncate
        arr = arr[: int(rng.integers(0, len(arr) + 1))]
    elif choice == 2:  # extend with noise
        arr += bytes(rng.integers(0, 256, size=int(rng.integers(1, 64)), dtype=np.uint8))
    elif choice == 3 and len(arr) >= 112:  # target header hot spots
        spot = int(rng.choice([40, 42, 44, 46, 48, 70, 72, 108]))  # dim, datatype, vox_offset
        width = int(rng.choice([2, 4]))
        arr[spot : spot + width] = bytes(rng.integers(0, 256, size=width, dtype=np.uint8))
    else:  # pure garbage
        arr = bytearray(rng.integers(0, 256, size=int(rng.integers(0, 512)), dtype=np.uint8))
    return bytes(arr)


def _mutate_json(text: str, rng: np.random.Generator) -> str:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return text
    choice = rng.integers(0, 5)
    if choice == 0 and isinstance(doc, dict) and doc:
        doc.pop(list(doc)[int(rng.integers(0, len(doc)))])
    elif choice == 1:
        doc["dims"] = [int(x) for x in rng.integers(-4, 1 << 20, size=3)]
    elif choice == 2:
        options = ["float64", "complex64", "", "int7", None, 7]
        doc["dtype"] = options[int(rng.integers(0, len(options)))]
    elif choice == 3:
        doc["data"] = "missing.raw"
    else:
        return text[: int(rng.integers(0, len(text)))]
    return json.dumps(doc)


def run_fuzz(seconds: float, seed: int, tmp: Path) -> FuzzReport:
    rng = np.random.default_rng(seed)
    tmp.mkdir(parents=True, exist_ok=True)
    seeds = _seed_files(tmp, rng)
    seed_blobs = [(p.name, p.read_bytes()) for p in seeds]
    raw_blob = (tmp / "img.raw").read_bytes()
    report = FuzzReport()
    deadline = time.monotonic() + seconds

    while time.monotonic() < deadline:
        name, blob = seed_blobs[int(rng.integers(0, len(seed_blobs)))]
        kind = f"mutate:{name}"
        if name.endswith(".mvol"):
            mutated = _mutate_json(blob.decode("utf-8"), rng).encode("utf-8")
            target = tmp / "case.mvol"
            # Give the sidecar its own fuzzed raw file under the expected name.
            (tmp / "case.raw").write_bytes(_mutate_bytes(raw_blob, rng) if rng.random() < 0.5 else raw_blob)
            # Mutated headers may still point at the seed's raw file; keep it intact.
        elif name.endswith(".nii.gz"):
            if rng.random() < 0.5:
                mutated = _mutate_bytes(blob, rng)  # corrupt the gzip container itself
            else:
                inner = _mutate_bytes(gzip.decompress(blob), rng)
                mutated = gzip.compress(inner, mtime=0)
            target = tmp / "case.nii.gz"
        else:
            mutated = _mutate_bytes(blob, rng)
            target = tmp / "case.nii"
        target.write_bytes(mutated)

        try:
            read_volume(target)
            report.record(kind, None, target, mutated)
        except BaseException as exc:  # the whole point is to observe everything
            report.record(kind, exc, target, mutated)
    return report
