"""Semantic class table and the merge down to the four coarse classes.

The coarse classes are fixed: Void=0, Ground=1, Bushes=2, Obstacles=3.
Fine-grained ids come from the shipped table (data/rellis_classes.txt),
which also assigns each one a coarse class. The coarse ids are embedded
in the fine id space (0..3 map to themselves), so remapping twice is the
same as remapping once.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import FormatError

__all__ = [
    "VOID",
    "GROUND",
    "BUSHES",
    "OBSTACLES",
    "MERGED_NAMES",
    "ClassTable",
    "load_class_table",
    "remap_labels",
]

VOID = 0
GROUND = 1
BUSHES = 2
OBSTACLES = 3

MERGED_NAMES = ("Void", "Ground", "Bushes", "Obstacles")
_MERGED_IDS = {name: i for i, name in enumerate(MERGED_NAMES)}


@dataclass(frozen=True)
class ClassTable:
    """Fine-grained label ids with names and their coarse assignment."""

    names: dict[int, str]
    merged: dict[int, int]

    @property
    def max_id(self) -> int:
        return max(self.names)

    def lookup(self) -> np.ndarray:
        """Dense fine-id -> coarse-id array, sized max_id + 1."""
        lut = np.zeros(self.max_id + 1, dtype=np.uint8)
        for fine, coarse in self.merged.items():
            lut[fine] = coarse
        return lut

    def merged_name(self, fine_id: int) -> str:
        return MERGED_NAMES[self.merged[fine_id]]


def _parse_class_table(text: str, source: str) -> ClassTable:
    names: dict[int, str] = {}
    merged: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{source}:{lineno}: expected 'id name merged', got {raw!r}")
        try:
            fine = int(parts[0])
        except ValueError:
            raise FormatError(f"{source}:{lineno}: bad id {parts[0]!r}") from None
        if fine < 0:
            raise FormatError(f"{source}:{lineno}: negative id {fine}")
        if fine in names:
            raise FormatError(f"{source}:{lineno}: duplicate id {fine}")
        if parts[2] not in _MERGED_IDS:
            raise FormatError(
                f"{source}:{lineno}: unknown merged class {parts[2]!r} "
                f"(expected one of {', '.join(MERGED_NAMES)})"
            )
        names[fine] = parts[1]
        merged[fine] = _MERGED_IDS[parts[2]]
    if not names:
        raise FormatError(f"{source}: no class rows found")
    for cid in range(4):
        if merged.get(cid) != cid:
            raise FormatError(
                f"{source}: id {cid} must map to {MERGED_NAMES[cid]} so the merge is idempotent"
            )
    return ClassTable(names=names, merged=merged)


def load_class_table(path=None) -> ClassTable:
    """Load the fine-grained class table; defaults to the shipped one."""
    if path is None:
        text = resources.files("ross.data").joinpath("rellis_classes.txt").read_text()
        return _parse_class_table(text, "rellis_classes.txt")
    with open(path, "r") as fh:
        return _parse_class_table(fh.read(), str(path))


def remap_labels(labels: np.ndarray, table: ClassTable | None = None) -> np.ndarray:
    """Map fine-grained ids to coarse ids {0,1,2,3}. Unknown ids become Void."""
    if table is None:
        table = load_class_table()
    labels = np.asarray(labels)
    if labels.size and labels.min() < 0:
        raise FormatError("negative label id")
    lut = table.lookup()
    out = np.zeros(labels.shape, dtype=np.uint8)
    known = labels <= table.max_id
    out[known] = lut[labels[known].astype(np.int64)]
    return out
