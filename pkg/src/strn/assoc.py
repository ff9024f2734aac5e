"""Score-matrix construction and bipartite assignment with threshold gating."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import pairfeat
from .errors import InvalidArgument, ValidationError
from .model import AblationMode, FULL_MODE, ModelDims


@dataclass
class Candidate:
    """A matchable tracklet view: pooled feature, last box and frame gap."""

    tracklet_id: int
    phi_st: np.ndarray
    last_box: np.ndarray
    gap: int


@dataclass
class ScoreMatrix:
    tracklet_ids: List[int]
    gaps: List[int]
    scores: np.ndarray  # (n_tracklets, n_detections), entries in (0, 1)

    def __post_init__(self):
        if len(set(self.tracklet_ids)) != len(self.tracklet_ids):
            raise InvalidArgument("duplicate tracklet ids in score matrix")


@dataclass
class AssignmentResult:
    matches: List[Tuple[int, int, float]]  # (tracklet id, detection index, score)
    unmatched_tracklets: List[int]
    unmatched_detections: List[int]


def build_score_matrix(candidates: List[Candidate], det_boxes, det_phi_s, meta,
                       store, mode: AblationMode = FULL_MODE,
                       dims: Optional[ModelDims] = None,
                       eps=1e-3) -> ScoreMatrix:
    """Score every (candidate, detection) pair in one batched pass."""
    n_cand = len(candidates)
    n_det = len(det_boxes)
    if n_cand == 0 or n_det == 0:
        return ScoreMatrix([c.tracklet_id for c in candidates],
                           [c.gap for c in candidates],
                           np.zeros((n_cand, n_det)))
    det_phi_s = np.asarray(det_phi_s, dtype=np.float64).reshape(n_det, -1)
    det_boxes = np.asarray(det_boxes, dtype=np.float64).reshape(n_det, 4)
    phi_st = np.repeat(np.stack([c.phi_st for c in candidates]), n_det, axis=0)
    phi_s = np.tile(det_phi_s, (n_cand, 1))
    boxes_i = np.repeat(np.stack([c.last_box for c in candidates]), n_det, axis=0)
    boxes_j = np.tile(det_boxes, (n_cand, 1))
    gaps = np.repeat([c.gap for c in candidates], n_det)
    scores = pairfeat.score_pairs(store, phi_st, phi_s, boxes_i, boxes_j, gaps,
                                  meta, mode, dims, eps)
    return ScoreMatrix([c.tracklet_id for c in candidates],
                       [c.gap for c in candidates],
                       scores.reshape(n_cand, n_det))


def solve(matrix: ScoreMatrix, threshold: float = 0.5) -> AssignmentResult:
    """Maximum-total-score assignment, then gating of sub-threshold matches.

    The matching is optimal over full assignments of the smaller side before
    gating; gating only demotes matched pairs whose score falls below the
    threshold, never creates matches.
    """
    if not (0.0 <= threshold < 1.0):
        raise InvalidArgument(f"threshold {threshold} outside [0, 1)")
    s = np.asarray(matrix.scores, dtype=np.float64)
    if s.size and not np.all(np.isfinite(s)):
        raise ValidationError("score matrix has non-finite entries")
    n_rows, n_cols = s.shape
    matches = []
    matched_rows, matched_cols = set(), set()
    if n_rows and n_cols:
        rows, cols = linear_sum_assignment(1.0 - s)
        for r, c in sorted(zip(rows, cols)):
            score = float(s[r, c])
            if score < threshold:
                continue
            matches.append((matrix.tracklet_ids[r], int(c), score))
            matched_rows.add(r)
            matched_cols.add(c)
    unmatched_t = [tid for i, tid in enumerate(matrix.tracklet_ids)
                   if i not in matched_rows]
    unmatched_d = [j for j in range(n_cols) if j not in matched_cols]
    return AssignmentResult(matches, unmatched_t, unmatched_d)
