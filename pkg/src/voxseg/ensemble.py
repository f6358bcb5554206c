"""Per-voxel majority voting over aligned label volumes.

An ensemble holds N predictions of the same grid (typically 9: three models
times three slicing axes).  Voting is over the four raw label codes; tumor
regions are composed afterwards from the voted volume.  Ties are broken by
an explicit label priority so the result is deterministic; the default
prefers the clinically critical labels: ET > NCR > ED > Else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _accel
from .errors import ShapeMismatch
from .volume import VALID_LABELS, Label, LabelVolume

DEFAULT_TIE_BREAK: tuple[Label, ...] = (Label.ET, Label.NCR, Label.ED, Label.ELSE)

# Label code -> dense index used by the counting kernel.
_CODE_TO_IDX = np.zeros(max(VALID_LABELS) + 1, dtype=np.uint8)
for _i, _code in enumerate(VALID_LABELS):
    _CODE_TO_IDX[_code] = _i
_IDX_TO_CODE = np.asarray(VALID_LABELS, dtype=np.uint8)


@dataclass(frozen=True)
class MemberInfo:
    """Provenance tag for one ensemble member."""

    model: str = ""
    axis: str = ""


@dataclass(frozen=True)
class EnsembleSet:
    """Aligned prediction volumes to be voted on.

    All members must share dims and spacing; provenance entries, when given,
    pair up with members by position.
    """

    members: tuple[LabelVolume, ...]
    provenance: tuple[MemberInfo, ...] = field(default=())

    def __init__(
        self,
        members: Sequence[LabelVolume],
        provenance: Sequence[MemberInfo] | None = None,
    ):
        members = tuple(members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        first = members[0]
        for k, m in enumerate(members[1:], start=1):
            if m.labels.shape != first.labels.shape:
                raise ShapeMismatch(
                    f"member {k} has dims {m.labels.shape}, expected {first.labels.shape}"
                )
            if m.spacing != first.spacing:
                raise ShapeMismatch(
                    f"member {k} has spacing {m.spacing}, expected {first.spacing}"
                )
        prov = tuple(provenance) if provenance is not None else ()
        if prov and len(prov) != len(members):
            raise ValueError(
                f"{len(prov)} provenance entries for {len(members)} members"
            )
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.members[0].labels.shape

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self.members[0].spacing


def _stacked_indices(es: EnsembleSet) -> np.ndarray:
    """(N, V) uint8 array of dense label indices, x-fastest voxel order."""
    flat = [
        _CODE_TO_IDX[m.labels.ravel(order="F")] for m in es.members
    ]
    return np.stack(flat, axis=0)

def vote_histogram(es: EnsembleSet) -> np.ndarray:
    """Per-voxel vote counts.

    Returns:
        uint16 array of shape dims + (4,); the last axis holds counts for
        label codes (0, 1, 2, 4) in that order and sums to ``len(es)``.
    """
    counts = _accel.label_vote_counts(_stacked_indices(es), len(VALID_LABELS))
    out = np.empty(es.dims + (len(VALID_LABELS),), dtype=np.uint16)
    for i in range(len(VALID_LABELS)):
        out[..., i] = counts[i].reshape(es.dims, order="F")
    return out


def majority_vote(
    es: EnsembleSet, tie_break: Sequence[Label] = DEFAULT_TIE_BREAK
) -> LabelVolume:
    """Label each voxel with the most-voted code.

    Ties go to the label earliest in ``tie_break``, which must order all
    four codes.  Output dims match the members; source is "ensemble".
    """
    order = tuple(Label(t) for t in tie_break)
    if sorted(order) != sorted(Label):
        raise ValueError(f"tie_break must order all labels exactly once, got {order}")

    counts = _accel.label_vote_counts(_stacked_indices(es), len(VALID_LABELS))
    # Rows sorted by priority: argmax returns the first maximum, which is
    # then the highest-priority label among the tied ones.
    priority_rows = np.array([_CODE_TO_IDX[c.value] for c in order])
    winner = np.argmax(counts[priority_rows], axis=0)
    codes = np.asarray([c.value for c in order], dtype=np.uint8)[winner]
    voted = codes.reshape(es.dims, order="F")
    return LabelVolume(voted, spacing=es.spacing, source="ensemble")
