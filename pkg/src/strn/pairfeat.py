"""Tracklet-object pair representation and the similarity head.

A pair is described by four blocks: a linear fusion of the two enhanced
appearance vectors (32-d), the cosine of their low-dimensional projections
(1-d), an embedded normalized-location pair (16-d) and an embedded
gap-normalized motion vector (16-d). The 65-d concatenation goes through a
two-layer ReLU network with a sigmoid output.

``score_pairs_node`` is the batched tape path used by training and the score
matrix builder; the single-pair functions mirror the per-block math for
direct use and for cross-checking the batched path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import geometry, tape
from .errors import InvalidArgument
from .model import (AblationMode, FULL_MODE, ModelDims, PAIR_FEATURE_DIM,
                    model_dims, param_constants)
from .tape import Node

SCORE_CLAMP = 1e-12  # keeps reported scores strictly inside (0, 1)


@dataclass
class PairFeature:
    relation: np.ndarray  # (32,)
    cos: float            # in [-1, 1]
    location: np.ndarray  # (16,)
    motion: np.ndarray    # (16,)

    def concat(self) -> np.ndarray:
        out = np.concatenate([self.relation, [self.cos], self.location, self.motion])
        if out.shape[0] != PAIR_FEATURE_DIM:
            raise InvalidArgument(
                f"pair feature dim {out.shape[0]} != {PAIR_FEATURE_DIM}")
        return out


def relation_feature(phi_st, phi_s, params) -> np.ndarray:
    u = tape.as_array(phi_st, "phi_st")
    v = tape.as_array(phi_s, "phi_s")
    wr = params["pair.Wr"]
    if u.shape[0] + v.shape[0] != wr.shape[1]:
        raise InvalidArgument(
            f"pair dims {u.shape[0]}+{v.shape[0]} != fusion input {wr.shape[1]}")
    return wr @ np.concatenate([u, v])


def cosine_feature(phi_st, phi_s, params) -> float:
    wc = params["pair.Wc"]
    return tape.cosine(wc @ np.asarray(phi_st), wc @ np.asarray(phi_s))


def location_feature(box_i, box_j, meta, params) -> np.ndarray:
    raw = np.concatenate([geometry.bare_location(box_i, meta.width, meta.height),
                          geometry.bare_location(box_j, meta.width, meta.height)])
    emb = geometry.sinusoidal_embed(raw, params["loc.embed"])
    return params["loc.Wl"] @ emb


def motion_feature(box_i, box_j, k, params, eps=geometry.EPS_GEO) -> np.ndarray:
    raw = geometry.motion_raw(box_i, box_j, k, eps)
    emb = geometry.sinusoidal_embed(raw, params["mot.embed"])
    return params["mot.Wm"] @ emb


def score_pair(pf: PairFeature, params) -> float:
    """Similarity of one assembled pair feature, strictly inside (0, 1)."""
    x = pf.concat()
    if not (-1.0 - 1e-9 <= pf.cos <= 1.0 + 1e-9):
        raise InvalidArgument(f"cosine component {pf.cos} outside [-1, 1]")
    h = np.maximum(params["head.Ws1"] @ x + params["head.Ws1.b"], 0.0)
    z = params["head.Ws2"] @ h + params["head.Ws2.b"]
    return float(np.clip(tape.sigmoid(z[0]), SCORE_CLAMP, 1.0 - SCORE_CLAMP))


# ---------------------------------------------------------------------------
# batched tape path
# ---------------------------------------------------------------------------

def location_embedding(boxes_i, boxes_j, meta, freqs) -> np.ndarray:
    """(B, d_loc_embed) location embedding for box-row pairs."""
    raw = np.concatenate(
        [geometry.bare_location_rows(boxes_i, meta.width, meta.height),
         geometry.bare_location_rows(boxes_j, meta.width, meta.height)], axis=1)
    return geometry.sinusoidal_embed(raw, freqs)


def motion_embedding(boxes_i, boxes_j, gaps, freqs, eps=geometry.EPS_GEO) -> np.ndarray:
    raw = geometry.motion_raw_rows(boxes_i, boxes_j, gaps, eps)
    return geometry.sinusoidal_embed(raw, freqs)


def score_pairs_node(phi_st: Node, phi_s: Node,
                     loc_emb: Optional[np.ndarray], mot_emb: Optional[np.ndarray],
                     P: Dict[str, Node], dims: ModelDims,
                     mode: AblationMode = FULL_MODE) -> Node:
    """Batched pair scoring; returns the (B,) logits node.

    Inactive blocks are substituted with zeros of the right width so the head
    always sees the full 65-d layout.
    """
    b = phi_st.value.shape[0]
    blocks = [tape.matmul(tape.concat_cols([phi_st, phi_s]),
                          tape.transpose(P["pair.Wr"]))]
    if mode.use_cosine:
        c1 = tape.matmul(phi_st, tape.transpose(P["pair.Wc"]))
        c2 = tape.matmul(phi_s, tape.transpose(P["pair.Wc"]))
        blocks.append(tape.reshape(tape.cosine_rows(c1, c2), (b, 1)))
    else:
        blocks.append(tape.constant(np.zeros((b, 1))))
    if mode.use_location:
        blocks.append(tape.matmul(tape.constant(loc_emb), tape.transpose(P["loc.Wl"])))
        blocks.append(tape.matmul(tape.constant(mot_emb), tape.transpose(P["mot.Wm"])))
    else:
        blocks.append(tape.constant(np.zeros((b, dims.d_loc))))
        blocks.append(tape.constant(np.zeros((b, dims.d_mot))))
    x = tape.concat_cols(blocks)
    h = tape.relu(tape.add_rowvec(tape.matmul(x, tape.transpose(P["head.Ws1"])),
                                  P["head.Ws1.b"]))
    z = tape.add_rowvec(tape.matmul(h, tape.transpose(P["head.Ws2"])),
                        P["head.Ws2.b"])
    return tape.reshape(z, (b,))


def scores_from_logits(logits: np.ndarray) -> np.ndarray:
    return np.clip(tape.sigmoid(logits), SCORE_CLAMP, 1.0 - SCORE_CLAMP)


def score_pairs(store, phi_st, phi_s, boxes_i, boxes_j, gaps, meta,
                mode: AblationMode = FULL_MODE,
                dims: Optional[ModelDims] = None,
                eps=geometry.EPS_GEO) -> np.ndarray:
    """Plain-array batched scoring -> (B,) scores in (0, 1)."""
    dims = dims or model_dims(store)
    phi_st = np.asarray(phi_st, dtype=np.float64)
    phi_s = np.asarray(phi_s, dtype=np.float64)
    if phi_st.shape != phi_s.shape or phi_st.ndim != 2:
        raise InvalidArgument("phi_st and phi_s must be matching (B, d) matrices")
    if phi_st.shape[0] == 0:
        return np.zeros(0)
    loc_emb = mot_emb = None
    if mode.use_location:
        loc_emb = location_embedding(boxes_i, boxes_j, meta, store["loc.embed"])
        mot_emb = motion_embedding(boxes_i, boxes_j, gaps, store["mot.embed"], eps)
    node = score_pairs_node(tape.constant(phi_st), tape.constant(phi_s),
                            loc_emb, mot_emb, param_constants(store), dims, mode)
    return scores_from_logits(node.value)
