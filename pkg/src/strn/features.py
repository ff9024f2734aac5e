"""Appearance feature provision.

The engine never touches images: appearance vectors come from a
:class:`FeatureProvider`. The file-backed provider reads the text format
written next to synthetic sequences (and usable for externally computed
embeddings); ``synthesize_identity_feature`` is the deterministic stand-in
used by the generator.
"""

from __future__ import annotations

import hashlib
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ParseError, ProviderMiss, ValidationError

FEATS_HEADER = "STRN-FEATS v1"


class FeatureProvider:
    """Contract: ordered features for a frame's detections, total and pure."""

    def features_for(self, frame: int, detections: Sequence) -> List[np.ndarray]:
        raise NotImplementedError


class DictFeatureProvider(FeatureProvider):
    def __init__(self, d_app: int, table: Dict[Tuple[int, int], np.ndarray]):
        self.d_app = d_app
        self._table = table

    def features_for(self, frame, detections):
        out = []
        for det in detections:
            key = (frame, det.index)
            vec = self._table.get(key)
            if vec is None:
                raise ProviderMiss(
                    f"no feature for frame {frame}, detection index {det.index}")
            out.append(vec)
        return out


def format_feature_file(d_app: int, records) -> str:
    """Serialize ((frame, index), vector) records."""
    lines = [f"{FEATS_HEADER} d={d_app}"]
    for (frame, index), vec in records:
        vals = ",".join(format(float(v), ".10g") for v in vec)
        lines.append(f"{frame},{index},{vals}")
    return "\n".join(lines) + "\n"


def parse_feature_file(text: str) -> DictFeatureProvider:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty feature file")
    head = lines[0].split()
    if len(head) != 3 or " ".join(head[:2]) != FEATS_HEADER or not head[2].startswith("d="):
        raise ParseError(f"bad feature header, expected {FEATS_HEADER!r} d=<dim>")
    try:
        d_app = int(head[2][2:])
    except ValueError:
        raise ParseError(f"bad feature dimension in header: {head[2]!r}") from None
    if d_app <= 0:
        raise ParseError("feature dimension must be positive")
    table: Dict[Tuple[int, int], np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2 + d_app:
            raise ParseError(
                f"line {lineno}: expected {2 + d_app} fields, got {len(parts)}")
        try:
            key = (int(parts[0]), int(parts[1]))
            vec = np.array([float(p) for p in parts[2:]], dtype=np.float64)
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric field") from None
        if key in table:
            raise ParseError(f"line {lineno}: duplicate key {key}")
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"line {lineno}: non-finite feature values")
        table[key] = vec
    return DictFeatureProvider(d_app, table)


def load_feature_file(path) -> DictFeatureProvider:
    with open(path, "r", encoding="ascii") as fh:
        return parse_feature_file(fh.read())


# ---------------------------------------------------------------------------
# synthetic features
# ---------------------------------------------------------------------------

_TWIN_MIX = 0.8  # base-direction cosine between lookalike identity pairs


def _unit(vec):
    n = np.linalg.norm(vec)
    if n < 1e-12:
        vec = np.zeros_like(vec)
        vec[0] = 1.0
        return vec
    return vec / n


def stable_seed(*parts) -> int:
    """Process-independent 64-bit seed from arbitrary tokens."""
    digest = hashlib.blake2s("|".join(str(p) for p in parts).encode("ascii"),
                             digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _hashed_unit(tag: str, ident: int, seed: int, d_app: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(stable_seed(tag, ident, seed)))
    return _unit(rng.standard_normal(d_app))


def identity_base(ident: int, seed: int, d_app: int) -> np.ndarray:
    """Deterministic unit base vector for an identity.

    Identities come in lookalike pairs: odd id 2j-1 and even id 2j share most
    of their direction (cosine ~ 0.8), mimicking visually similar targets.
    """
    ident = int(ident)
    anchor = ident if ident % 2 == 1 else ident - 1
    base = _hashed_unit("id", anchor, seed, d_app)
    if ident == anchor:
        return base
    other = _hashed_unit("id", ident, seed, d_app)
    other = _unit(other - np.dot(other, base) * base)
    return _unit(_TWIN_MIX * base + np.sqrt(1.0 - _TWIN_MIX ** 2) * other)


def synthesize_identity_feature(ident: int, seed: int, sigma_feat: float,
                                rng: np.random.Generator,
                                d_app: int = 64) -> np.ndarray:
    """Noisy unit appearance vector for an identity.

    The perturbation has expected norm ``sigma_feat`` (noise is drawn per
    coordinate with std sigma_feat/sqrt(d)), after which the vector is
    renormalized. Repeated calls with ``sigma_feat == 0`` return the identical
    base vector.
    """
    if sigma_feat < 0:
        raise ValidationError("sigma_feat must be >= 0")
    base = identity_base(ident, seed, d_app)
    if sigma_feat == 0:
        return base.copy()
    noise = rng.standard_normal(d_app) * (sigma_feat / np.sqrt(d_app))
    return _unit(base + noise)


def random_unit_feature(rng: np.random.Generator, d_app: int) -> np.ndarray:
    """Independent random unit vector (used for false-positive detections)."""
    return _unit(rng.standard_normal(d_app))


def degradation_direction(seed: int, d_app: int) -> np.ndarray:
    """Fixed per-seed direction that corrupted captures drift toward."""
    return _hashed_unit("degraded", 0, seed, d_app)
