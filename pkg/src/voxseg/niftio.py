"""Volume ingestion and emission.

Two formats, selected by file extension:

* ``.nii`` / ``.nii.gz`` - a minimal single-file NIfTI-1 subset: 348-byte
  header, magic ``n+1``, data at ``vox_offset``.  Supported on-disk dtypes
  are uint8, int16, int32, and float32.  Spacing comes from ``pixdim``;
  non-diagonal orientation matrices are ignored with a warning (inputs are
  co-registered).  Writes are little-endian with ``vox_offset`` 352 and a
  zeroed gzip mtime, so identical volumes produce identical bytes.
* ``.mvol`` - an internal sidecar pair for intermediate artifacts:
  ``<stem>.mvol`` holds a small JSON header, ``<stem>.raw`` the voxels,
  little-endian in x-fastest order.

The readers treat header fields as untrusted: every size is checked against
what the file actually contains before memory is committed, and compressed
payloads are consumed incrementally so a short stream fails with
``TruncatedFile`` instead of a giant allocation.
"""

from __future__ import annotations

import gzip
import json
import os
import warnings
import zlib
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import BadMagic, FormatError, TruncatedFile, UnsupportedDatatype
from .volume import AnyVolume, LabelVolume, Modality, Volume

HEADER_SIZE = 348
WRITE_VOX_OFFSET = 352

# NIfTI-1 datatype codes for the supported subset.
_DTYPE_BY_CODE = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
}
_CODE_BY_NAME = {str(dt): code for code, dt in _DTYPE_BY_CODE.items()}

_KIND_IMAGE = "image"
_KIND_LABELS = "labels"

_HEADER_FIELDS = [
    ("sizeof_hdr", "i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "i4"),
    ("session_error", "i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "i2", 8),
    ("intent_p1", "f4"),
    ("intent_p2", "f4"),
    ("intent_p3", "f4"),
    ("intent_code", "i2"),
    ("datatype", "i2"),
    ("bitpix", "i2"),
    ("slice_start", "i2"),
    ("pixdim", "f4", 8),
    ("vox_offset", "f4"),
    ("scl_slope", "f4"),
    ("scl_inter", "f4"),
    ("slice_end", "i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "f4"),
    ("cal_min", "f4"),
    ("slice_duration", "f4"),
    ("toffset", "f4"),
    ("glmax", "i4"),
    ("glmin", "i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "i2"),
    ("sform_code", "i2"),
    ("quatern_b", "f4"),
    ("quatern_c", "f4"),
    ("quatern_d", "f4"),
    ("qoffset_x", "f4"),
    ("qoffset_y", "f4"),
    ("qoffset_z", "f4"),
    ("srow_x", "f4", 4),
    ("srow_y", "f4", 4),
    ("srow_z", "f4", 4),
    ("intent_name", "S16"),
    ("magic", "S4"),
]


def _header_dtype(byteorder: str) -> np.dtype:
    fields = [
        (name, byteorder + kind) if len(entry) == 2 else (name, byteorder + kind, entry[2])
        for entry in _HEADER_FIELDS
        for name, kind in [entry[:2]]
    ]
    return np.dtype(fields)


_HDR_LE = _header_dtype("<")
_HDR_BE = _header_dtype(">")
assert _HDR_LE.itemsize == HEADER_SIZE


def _is_gz(path: Path) -> bool:
    return path.name.endswith(".gz")


def _open_for_read(path: Path) -> BinaryIO:
    if _is_gz(path):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    """Read exactly n bytes in bounded chunks; short stream -> TruncatedFile."""
    chunks = []
    got = 0
    while got < n:
        try:
            chunk = f.read(min(1 << 20, n - got))
        except (gzip.BadGzipFile, EOFError, zlib.error) as exc:
            raise TruncatedFile(f"corrupt compressed stream while reading {what}: {exc}")
        if not chunk:
            raise TruncatedFile(f"file ends inside {what}: expected {n} bytes, got {got}")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _parse_header(raw: bytes) -> np.void:
    hdr = np.frombuffer(raw, dtype=_HDR_LE, count=1)[0]
    if hdr["magic"] != b"n+1":  # S4 comparison ignores trailing NULs
        raise BadMagic(f"not a single-file NIfTI-1 volume (magic {bytes(hdr['magic'])!r})")
    if not 1 <= hdr["dim"][0] <= 7:
        hdr = np.frombuffer(raw, dtype=_HDR_BE, count=1)[0]
        if not 1 <= hdr["dim"][0] <= 7:
            raise FormatError(f"implausible dim[0]={hdr['dim'][0]} in either byte order")
    return hdr


def _header_geometry(hdr: np.void) -> tuple[tuple[int, ...], np.dtype, int, tuple[float, float, float]]:
    code = int(hdr["datatype"])
    if code not in _DTYPE_BY_CODE:
        raise UnsupportedDatatype(f"datatype code {code} not in supported set {sorted(_DTYPE_BY_CODE)}")
    dtype = _DTYPE_BY_CODE[code]

    ndim = int(hdr["dim"][0])
    dims = [int(d) for d in hdr["dim"][1 : 1 + ndim]]
    if any(d < 1 for d in dims):
        raise FormatError(f"non-positive dimension in dim={dims}")
    while len(dims) > 3 and dims[-1] == 1:
        dims.pop()
    if len(dims) > 3:
        raise FormatError(f"only 3-D volumes supported, got dims {dims}")
    while len(dims) < 3:
        dims.append(1)

    vox_offset = float(hdr["vox_offset"])
    if not np.isfinite(vox_offset) or vox_offset < HEADER_SIZE or vox_offset > 2**31:
        raise FormatError(f"implausible vox_offset {vox_offset}")

    slope, inter = float(hdr["scl_slope"]), float(hdr["scl_inter"])
    if slope not in (0.0, 1.0) or inter != 0.0:
        raise FormatError(f"value scaling (slope={slope}, inter={inter}) not supported")

    spacing = []
    for p in hdr["pixdim"][1:4]:
        p = float(p)
        # pixdim of 0 is common for padded dims; treat as 1 mm.
        spacing.append(p if np.isfinite(p) and p > 0 else 1.0)

    if int(hdr["sform_code"]) > 0:
        rot = np.array([hdr["srow_x"][:3], hdr["srow_y"][:3], hdr["srow_z"][:3]])
        if np.any(rot[~np.eye(3, dtype=bool)] != 0):
            warnings.warn("non-diagonal orientation matrix ignored; using pixdim spacing", stacklevel=3)

    return tuple(dims), dtype, int(vox_offset), (spacing[0], spacing[1], spacing[2])


def _parse_descrip(hdr: np.void) -> tuple[str, str]:
    kind, tag = _KIND_IMAGE, ""
    for part in bytes(hdr["descrip"]).decode("ascii", errors="replace").split(";"):
        key, sep, value = part.partition("=")
        if sep and key == "kind":
            kind = value
        elif sep and key == "tag":
            tag = value
    if kind not in (_KIND_IMAGE, _KIND_LABELS):
        kind = _KIND_IMAGE
    return kind, tag


def _build_volume(arr: np.ndarray, spacing, kind: str, tag: str) -> AnyVolume:
    if kind == _KIND_LABELS:
        return LabelVolume(arr, spacing=spacing, source=tag)
    try:
        modality = Modality(tag)
    except ValueError:
        modality = Modality.OTHER
    return Volume(arr, spacing=spacing, modality=modality)


def _read_nifti(path: Path, as_kind: str | None) -> AnyVolume:
    with _open_for_read(path) as f:
        hdr = _parse_header(_read_exact(f, HEADER_SIZE, "header"))
        dims, dtype, vox_offset, spacing = _header_geometry(hdr)
        nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize

        if not _is_gz(path):
            actual = os.fstat(f.fileno()).st_size
            if actual < vox_offset + nbytes:
                raise TruncatedFile(
                    f"file is {actual} bytes; header implies at least {vox_offset + nbytes}"
                )
        _read_exact(f, vox_offset - HEADER_SIZE, "pre-data gap")
        payload = _read_exact(f, nbytes, "voxel data")

    byteorder = _HDR_BE if hdr.dtype == _HDR_BE else _HDR_LE
    arr = np.frombuffer(payload, dtype=dtype.newbyteorder(">" if byteorder is _HDR_BE else "<"))
    arr = arr.astype(dtype, copy=False).reshape(dims, order="F")

    kind, tag = _parse_descrip(hdr)
    return _build_volume(arr, spacing, as_kind or kind, tag)


def _unpack_any(vol: AnyVolume) -> tuple[np.ndarray, tuple[float, float, float], str, str]:
    if isinstance(vol, LabelVolume):
        return vol.labels, vol.spacing, _KIND_LABELS, vol.source
    return vol.data, vol.spacing, _KIND_IMAGE, vol.modality.value


def _write_nifti(vol: AnyVolume, path: Path) -> None:
    arr, spacing, kind, tag = _unpack_any(vol)
    name = str(arr.dtype)
    if name not in _CODE_BY_NAME:
        raise UnsupportedDatatype(
            f"dtype {name} has no on-disk code; supported: {sorted(_CODE_BY_NAME)}"
        )

    hdr = np.zeros((), dtype=_HDR_LE)
    hdr["sizeof_hdr"] = HEADER_SIZE
    hdr["regular"] = b"r"
    hdr["dim"] = [3, *arr.shape, 1, 1, 1, 1]
    hdr["datatype"] = _CODE_BY_NAME[name]
    hdr["bitpix"] = arr.dtype.itemsize * 8
    hdr["pixdim"] = [1.0, *spacing, 0.0, 0.0, 0.0, 0.0]
    hdr["vox_offset"] = WRITE_VOX_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["descrip"] = f"kind={kind};tag={tag}".encode("ascii")[:79]
    hdr["sform_code"] = 1
    hdr["srow_x"] = [spacing[0], 0, 0, 0]
    hdr["srow_y"] = [0, spacing[1], 0, 0]
    hdr["srow_z"] = [0, 0, spacing[2], 0]
    hdr["magic"] = b"n+1"

    blob = hdr.tobytes() + b"\x00\x00\x00\x00" + arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="F")
    if _is_gz(path):
        with open(path, "wb") as f:
            # filename="" and mtime=0 keep output byte-identical across reruns.
            with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                gz.write(blob)
    else:
        path.write_bytes(blob)


def _read_mvol(path: Path, as_kind: str | None) -> AnyVolume:
    try:
        header = json.loads(path.read_text("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"unparseable mvol header {path}: {exc}")
    if not isinstance(header, dict) or header.get("format") != "mvol":
        raise BadMagic(f"{path} is not an mvol header")
    try:
        dims = tuple(int(d) for d in header["dims"])
        spacing = tuple(float(s) for s in header["spacing"])
        dtype_name = str(header["dtype"])
        kind = str(header["kind"])
        tag = str(header.get("tag", ""))
        data_name = str(header.get("data", path.stem + ".raw"))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad mvol header field in {path}: {exc}")
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise FormatError(f"mvol dims must be three positive ints, got {dims}")
    if dtype_name not in _CODE_BY_NAME:
        raise UnsupportedDatatype(f"mvol dtype {dtype_name!r}; supported: {sorted(_CODE_BY_NAME)}")
    dtype = np.dtype(dtype_name)

    raw_path = path.parent / data_name
    nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    actual = raw_path.stat().st_size
    if actual < nbytes:
        raise TruncatedFile(f"{raw_path} is {actual} bytes; dims imply {nbytes}")
    if actual > nbytes:
        raise FormatError(f"{raw_path} is {actual} bytes; dims imply exactly {nbytes}")
    arr = np.fromfile(raw_path, dtype=dtype.newbyteorder("<")).astype(dtype, copy=False)
    return _build_volume(arr.reshape(dims, order="F"), spacing, as_kind or kind, tag)


def _write_mvol(vol: AnyVolume, path: Path) -> None:
    arr, spacing, kind, tag = _unpack_any(vol)
    name = str(arr.dtype)
    if name not in _CODE_BY_NAME:
        raise UnsupportedDatatype(
            f"dtype {name} has no on-disk code; supported: {sorted(_CODE_BY_NAME)}"
        )
    raw_name = path.stem + ".raw"
    header = {
        "format": "mvol",
        "version": 1,
        "dims": list(arr.shape),
        "spacing": list(spacing),
        "dtype": name,
        "kind": kind,
        "tag": tag,
        "data": raw_name,
        "order": "x-fastest",
        "byteorder": "little",
    }
    path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", "utf-8")
    with open(path.parent / raw_name, "wb") as f:
        f.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="F"))


def read_volume(path: str | os.PathLike, as_kind: str | None = None) -> AnyVolume:
    """Read a volume, picking the format from the extension.

    Args:
        path: ``*.nii``, ``*.nii.gz``, or ``*.mvol`` file.
        as_kind: force interpretation as ``"image"`` or ``"labels"``,
            overriding the file's own metadata.  Needed for external files
            (e.g. dataset ground truth) that carry no kind tag.

    Raises:
        BadMagic, UnsupportedDatatype, TruncatedFile, FormatError on
        malformed input; BadLabel when a labels file holds codes outside
        {0, 1, 2, 4}; OSError for plain I/O failures.
    """
    if as_kind not in (None, _KIND_IMAGE, _KIND_LABELS):
        raise ValueError(f"as_kind must be 'image' or 'labels', got {as_kind!r}")
    p = Path(path)
    if p.name.endswith((".nii", ".nii.gz")):
        return _read_nifti(p, as_kind)
    if p.suffix == ".mvol":
        return _read_mvol(p, as_kind)
    raise ValueError(f"cannot infer format from extension of {p.name!r}")


def write_volume(vol: AnyVolume, path: str | os.PathLike) -> None:
    """Write a volume; the extension selects the format as in read_volume."""
    p = Path(path)
    if p.name.endswith((".nii", ".nii.gz")):
        _write_nifti(vol, p)
    elif p.suffix == ".mvol":
        _write_mvol(vol, p)
    else:
        raise ValueError(f"cannot infer format from extension of {p.name!r}")
