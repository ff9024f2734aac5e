"""Spatial relation enhancement and temporal aggregation of object features.

Per frame, each object's appearance vector is refined by attending over all
objects in the frame: appearance logits are scaled dot products of projected
features, modulated by a nonnegative geometric gate computed from pairwise
relative box geometry. Per tracklet, the refined features of the most recent
observations are pooled into a single vector, by default with learned
attention weights.

Everything is built on the tape so the same code serves training and
inference; the plain-array wrappers just read node values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import geometry, tape
from .errors import InvalidArgument
from .model import ModelDims, model_dims, param_constants
from .tape import Node


@dataclass
class AttentionInfo:
    """Diagnostics from one frame enhancement."""

    attention: np.ndarray  # (heads, n, n), rows sum to 1
    gates: np.ndarray      # (n, n), >= 0


def gate_embedding(boxes, freqs, eps=geometry.EPS_GEO):
    """Sinusoidal embedding of all pairwise relative geometries -> (n*n, d_geo)."""
    rel = geometry.pairwise_relative_geometry(boxes, eps)
    n = rel.shape[0]
    return geometry.sinusoidal_embed(rel.reshape(n * n, 4), freqs)


def geometric_weight(rel, params) -> float:
    """Gate value for one relative-geometry vector: ReLU(linear(embed(rel)))."""
    rel = np.asarray(rel, dtype=np.float64)
    emb = geometry.sinusoidal_embed(rel, params["geo.embed"])
    raw = params["geo.linear"] @ emb + params["geo.linear.b"]
    return float(np.maximum(raw, 0.0)[0])


def enhance_frame(phi: Node, geo_emb: np.ndarray, P: Dict[str, Node],
                  dims: ModelDims) -> tuple[Node, AttentionInfo]:
    """Spatial relation reasoning over one frame.

    ``phi`` is (n, d_app); ``geo_emb`` the precomputed (n*n, d_geo) gate
    embedding for the frame's boxes. Returns the enhanced (n, d_app) node plus
    attention diagnostics.
    """
    n = phi.value.shape[0]
    gate_raw = tape.add_rowvec(
        tape.matmul(tape.constant(geo_emb), tape.transpose(P["geo.linear"])),
        P["geo.linear.b"])
    gates = tape.reshape(tape.relu(gate_raw), (n, n))

    head_outs = []
    attn_values = []
    inv_sqrt_d = 1.0 / np.sqrt(dims.d_key)
    for h in range(dims.heads):
        q = tape.matmul(phi, tape.transpose(P[f"spatial.Wq.h{h}"]))
        k = tape.matmul(phi, tape.transpose(P[f"spatial.Wk.h{h}"]))
        logits = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_d)
        attn = tape.weighted_softmax_rows(logits, gates)
        v = tape.matmul(phi, tape.transpose(P[f"spatial.Wv.h{h}"]))
        head_outs.append(tape.matmul(attn, v))
        attn_values.append(attn.value)
    mixed = head_outs[0] if len(head_outs) == 1 else tape.concat_cols(head_outs)
    enhanced = tape.add(phi, mixed)
    info = AttentionInfo(attention=np.stack(attn_values), gates=gates.value)
    return enhanced, info


def spatial_enhance(feats, boxes, store, dims: Optional[ModelDims] = None,
                    eps=geometry.EPS_GEO):
    """Plain-array spatial enhancement: (n, d) features + (n, 4) boxes.

    Returns (enhanced (n, d), AttentionInfo).
    """
    feats = tape.as_array(feats, "features")
    if feats.ndim != 2:
        raise InvalidArgument("features must be a (n, d) matrix")
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    if boxes.shape[0] != feats.shape[0]:
        raise InvalidArgument(
            f"{feats.shape[0]} features vs {boxes.shape[0]} boxes")
    dims = dims or model_dims(store)
    if feats.shape[1] != dims.d_app:
        raise InvalidArgument(
            f"feature dim {feats.shape[1]} != model d_app {dims.d_app}")
    geo_emb = gate_embedding(boxes, store["geo.embed"], eps)
    node, info = enhance_frame(tape.constant(feats), geo_emb,
                               param_constants(store), dims)
    return node.value, info


def aggregate_window_node(window: Node, w_t: Node, temporal: str) -> Node:
    """Pool an (n, d) window of enhanced features into one d-vector."""
    n, d = window.value.shape
    if temporal == "last":
        return tape.row(window, n - 1)
    if temporal == "attention":
        logits = tape.matmul(window, w_t)
        weights = tape.softmax_vec(logits)
    elif temporal == "avg":
        weights = tape.constant(np.full(n, 1.0 / n))
    elif temporal == "max":
        return tape.max_axis0(window)
    else:
        raise InvalidArgument(f"unknown temporal mode {temporal!r}")
    pooled = tape.matmul(tape.reshape(weights, (1, n)), window)
    return tape.reshape(pooled, (d,))


def temporal_weights(window, w_t) -> np.ndarray:
    """Softmax attention weights over a (n, d) window; sums to 1."""
    window = tape.as_array(window, "window")
    if window.ndim != 2:
        raise InvalidArgument("window must be a (n, d) matrix")
    return tape.softmax(window @ np.asarray(w_t, dtype=np.float64))


def temporal_aggregate(window, w_t, temporal: str = "attention") -> np.ndarray:
    """Plain-array window pooling (see ``aggregate_window_node``)."""
    window = tape.as_array(window, "window")
    if window.ndim != 2:
        raise InvalidArgument("window must be a (n, d) matrix")
    node = aggregate_window_node(tape.constant(window),
                                 tape.constant(np.asarray(w_t, dtype=np.float64)),
                                 temporal)
    return node.value
