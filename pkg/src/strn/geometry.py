"""Box geometry and the parameter-free sinusoidal embeddings.

Boxes are center-based everywhere inside the package: ``(cx, cy, w, h)`` in
pixels, float64. File I/O converts from/to the top-left convention at the
boundary (see ``motio``).
"""

from __future__ import annotations

import numpy as np

EPS_GEO = 1e-3  # lower clamp for offset ratios before the log


def to_corners(boxes):
    """(…, 4) center boxes -> (left, top, right, bottom)."""
    b = np.asarray(boxes, dtype=np.float64)
    half = b[..., 2:] / 2.0
    return np.concatenate([b[..., :2] - half, b[..., :2] + half], axis=-1)


def iou(b1, b2) -> float:
    """Intersection over union of two center-based boxes."""
    return float(iou_matrix(np.asarray(b1)[None, :], np.asarray(b2)[None, :])[0, 0])


def iou_matrix(a, b):
    """Pairwise IoU of (m, 4) x (n, 4) center-based boxes -> (m, n)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ca, cb = to_corners(a), to_corners(b)
    lt = np.maximum(ca[:, None, :2], cb[None, :, :2])
    rb = np.minimum(ca[:, None, 2:], cb[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = a[:, 2] * a[:, 3]
    area_b = b[:, 2] * b[:, 3]
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    # corner arithmetic can overshoot area*1.0 by an ulp for far-away boxes
    return np.clip(out, 0.0, 1.0)


def relative_geometry(box_i, box_j, eps=EPS_GEO):
    """Log-ratio geometry of receiver i relative to sender j.

    (log |Δx|/w_j, log |Δy|/h_j, log w_i/w_j, log h_i/h_j) with the two offset
    ratios clamped below at ``eps`` so the log stays bounded.
    """
    bi = np.asarray(box_i, dtype=np.float64)
    bj = np.asarray(box_j, dtype=np.float64)
    dx = np.abs(bi[0] - bj[0]) / bj[2]
    dy = np.abs(bi[1] - bj[1]) / bj[3]
    return np.log([max(dx, eps), max(dy, eps), bi[2] / bj[2], bi[3] / bj[3]])


def pairwise_relative_geometry(boxes, eps=EPS_GEO):
    """relative_geometry for every ordered pair -> (n, n, 4); [i, j] = (i rel j)."""
    b = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    x, y, w, h = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    dx = np.abs(x[:, None] - x[None, :]) / w[None, :]
    dy = np.abs(y[:, None] - y[None, :]) / h[None, :]
    rw = w[:, None] / w[None, :]
    rh = h[:, None] / h[None, :]
    out = np.stack([np.maximum(dx, eps), np.maximum(dy, eps), rw, rh], axis=-1)
    return np.log(out)


def motion_raw(box_i, box_j, k, eps=EPS_GEO):
    """Gap-normalized motion vector between a past box i and a current box j."""
    return motion_raw_rows(np.asarray(box_i)[None, :], np.asarray(box_j)[None, :],
                           np.asarray([k]), eps)[0]


def motion_raw_rows(boxes_i, boxes_j, gaps, eps=EPS_GEO):
    """Vectorized ``motion_raw`` over (B, 4) box rows and (B,) frame gaps."""
    bi = np.asarray(boxes_i, dtype=np.float64).reshape(-1, 4)
    bj = np.asarray(boxes_j, dtype=np.float64).reshape(-1, 4)
    k = np.asarray(gaps, dtype=np.float64)
    dx = np.abs(bi[:, 0] - bj[:, 0]) / (k * bi[:, 2])
    dy = np.abs(bi[:, 1] - bj[:, 1]) / (k * bi[:, 3])
    rw = bj[:, 2] / (k * bi[:, 2])
    rh = bj[:, 3] / (k * bi[:, 3])
    return np.log(np.stack([np.maximum(dx, eps), np.maximum(dy, eps), rw, rh], axis=1))


def bare_location(box, width, height):
    """Image-normalized absolute location (x/W, y/H, w/W, h/H), unclamped."""
    b = np.asarray(box, dtype=np.float64)
    return b / np.array([width, height, width, height], dtype=np.float64)


def bare_location_rows(boxes, width, height):
    b = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    return b / np.array([width, height, width, height], dtype=np.float64)


# ---------------------------------------------------------------------------
# sinusoidal embedding
# ---------------------------------------------------------------------------

def embed_frequencies(n_freq: int):
    """Angular frequencies for wavelengths geometrically spaced in [1, 1000]."""
    if n_freq == 1:
        lam = np.array([1.0])
    else:
        lam = 1000.0 ** (np.arange(n_freq) / (n_freq - 1))
    return 2.0 * np.pi / lam


def sinusoidal_embed(values, freqs):
    """Embed each scalar with sin/cos at the given angular frequencies.

    ``values`` has shape (..., n); the result has shape (..., n * 2 * len(freqs))
    laid out scalar-major: for each input scalar, all sines then all cosines.
    """
    v = np.asarray(values, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    phase = v[..., :, None] * freqs  # (..., n, F)
    out = np.concatenate([np.sin(phase), np.cos(phase)], axis=-1)  # (..., n, 2F)
    return out.reshape(v.shape[:-1] + (v.shape[-1] * 2 * freqs.size,))
