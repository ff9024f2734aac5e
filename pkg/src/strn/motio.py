"""MOTChallenge-format ingestion and emission.

Files use the top-left box convention; everything inside the package is
center-based, and this module is the single conversion boundary. All numeric
output uses '.' as the decimal separator regardless of locale.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .errors import ParseError, ValidationError

_SEQINFO_KEYS = ("name", "imWidth", "imHeight", "frameRate", "seqLength")


@dataclass(frozen=True)
class SequenceMeta:
    width: int
    height: int
    frame_rate: float
    length: int
    name: str

    def __post_init__(self):
        for key in ("width", "height", "frame_rate", "length"):
            if getattr(self, key) <= 0:
                raise ValidationError(f"seqinfo {key} must be positive")


@dataclass
class Detection:
    box: np.ndarray      # center-based (cx, cy, w, h)
    conf: float
    index: int           # position within the frame's file order


@dataclass
class MotData:
    """Parsed per-frame boxes plus a count of skipped degenerate rows."""

    by_frame: Dict[int, list]
    skipped: int = 0
    frames: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.frames = sorted(self.by_frame)


def parse_seqinfo(text: str) -> SequenceMeta:
    """Parse seqinfo.ini-style text; unknown keys are ignored."""
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(("[", ";", "#")):
            continue
        if "=" not in line:
            continue
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    for key in _SEQINFO_KEYS:
        if key not in values:
            raise ParseError(f"seqinfo is missing key {key!r}")
    try:
        return SequenceMeta(
            width=int(values["imWidth"]),
            height=int(values["imHeight"]),
            frame_rate=float(values["frameRate"]),
            length=int(values["seqLength"]),
            name=values["name"],
        )
    except ValueError as exc:
        raise ParseError(f"bad seqinfo value: {exc}") from None


def _center(left, top, w, h):
    return np.array([left + w / 2.0, top + h / 2.0, w, h], dtype=np.float64)


def parse_mot_file(text: str, kind: str = "detections") -> MotData:
    """Parse comma-separated MOT rows into per-frame lists.

    ``kind`` is "detections" (rows become :class:`Detection`, file ids are
    ignored) or "ground-truth" (rows become (id, box) tuples; ids <= 0 are
    dropped). Rows with non-positive sizes are skipped and counted; anything
    else malformed raises :class:`ParseError` with the line number.
    """
    if kind not in ("detections", "ground-truth"):
        raise ParseError(f"unknown kind {kind!r}")
    by_frame: Dict[int, list] = {}
    skipped = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) < 7:
            raise ParseError(f"line {lineno}: expected >= 7 fields, got {len(parts)}")
        try:
            frame = int(float(parts[0]))
            obj_id = int(float(parts[1]))
            left, top, w, h = (float(p) for p in parts[2:6])
            conf = float(parts[6])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric field") from None
        if frame < 1:
            raise ParseError(f"line {lineno}: frame {frame} < 1")
        if w <= 0 or h <= 0:
            skipped += 1
            continue
        box = _center(left, top, w, h)
        bucket = by_frame.setdefault(frame, [])
        if kind == "detections":
            bucket.append(Detection(box=box, conf=conf, index=len(bucket)))
        else:
            if obj_id <= 0:
                skipped += 1
                continue
            bucket.append((obj_id, box))
    return MotData(by_frame=by_frame, skipped=skipped)


def format_results(records) -> str:
    """Render (frame, id, center-box) records as MOTChallenge result rows."""
    lines = []
    for frame, obj_id, box in sorted(records, key=lambda r: (r[0], r[1])):
        cx, cy, w, h = (float(v) for v in box)
        left, top = cx - w / 2.0, cy - h / 2.0
        lines.append(f"{frame},{obj_id},{left:.2f},{top:.2f},{w:.2f},{h:.2f},1,-1,-1,-1")
    return "\n".join(lines) + ("\n" if lines else "")


def write_results(records, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_results(records))


def format_gt(records) -> str:
    """Render (frame, id, center-box) ground-truth rows (9-column gt.txt)."""
    lines = []
    for frame, obj_id, box in sorted(records, key=lambda r: (r[0], r[1])):
        cx, cy, w, h = (float(v) for v in box)
        left, top = cx - w / 2.0, cy - h / 2.0
        lines.append(f"{frame},{obj_id},{left:.2f},{top:.2f},{w:.2f},{h:.2f},1,1,1")
    return "\n".join(lines) + ("\n" if lines else "")


def format_detections(records) -> str:
    """Render (frame, center-box, conf) detection rows (id column -1)."""
    lines = []
    for frame, box, conf in records:
        cx, cy, w, h = (float(v) for v in box)
        left, top = cx - w / 2.0, cy - h / 2.0
        lines.append(f"{frame},-1,{left:.2f},{top:.2f},{w:.2f},{h:.2f},{conf:.2f},-1,-1,-1")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# sequence directories
# ---------------------------------------------------------------------------

def read_text(path) -> str:
    with open(path, "r", encoding="ascii") as fh:
        return fh.read()


@dataclass
class SequenceDir:
    meta: SequenceMeta
    detections: MotData
    gt: MotData | None
    root: str

    @property
    def feature_path(self) -> str:
        return os.path.join(self.root, "feat", "feat.txt")


def load_sequence_dir(root, with_gt: bool = True) -> SequenceDir:
    meta = parse_seqinfo(read_text(os.path.join(root, "seqinfo.ini")))
    det_path = os.path.join(root, "det", "det.txt")
    detections = parse_mot_file(read_text(det_path), "detections")
    gt = None
    gt_path = os.path.join(root, "gt", "gt.txt")
    if with_gt and os.path.exists(gt_path):
        gt = parse_mot_file(read_text(gt_path), "ground-truth")
    return SequenceDir(meta=meta, detections=detections, gt=gt, root=root)
