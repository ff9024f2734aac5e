"""The tracker's concrete parameter set: names, shapes, init, ablation modes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry, tape
from .errors import InvalidArgument, ValidationError
from .params import ParamStore, glorot_uniform

PAIR_FEATURE_DIM = 32 + 1 + 16 + 16  # relation + cosine + location + motion

# embedding frequency tables are part of the weights file but never trained
NON_TRAINABLE = ("geo.embed", "loc.embed", "mot.embed")


@dataclass(frozen=True)
class ModelDims:
    d_app: int = 64         # appearance feature width
    heads: int = 1
    d_key: int = 64         # attention projection width
    d_geo: int = 64         # gate net embedding width (4 scalars x 16)
    d_relation: int = 32
    d_cos_proj: int = 128
    d_loc: int = 16         # projected location feature width
    d_mot: int = 16
    d_loc_embed: int = 64   # 8 scalars x 8
    d_mot_embed: int = 64   # 4 scalars x 16
    d_hidden: int = 64

    def __post_init__(self):
        if self.d_app % self.heads:
            raise InvalidArgument(
                f"heads ({self.heads}) must divide d_app ({self.d_app})")


@dataclass(frozen=True)
class AblationMode:
    """Which parts of the pair representation are active.

    ``temporal`` is one of "attention" (learned weights), "last" (most recent
    enhanced feature only), "avg" (uniform pooling), "max" (coordinate-wise
    max pooling).
    """

    use_cosine: bool = True
    use_location: bool = True
    use_spatial: bool = True
    temporal: str = "attention"

    def __post_init__(self):
        if self.temporal not in ("attention", "last", "avg", "max"):
            raise InvalidArgument(f"unknown temporal mode {self.temporal!r}")


FULL_MODE = AblationMode()

# Named ablation rungs. The cosine branch is zeroed in every named mode and is
# only active in the default full mode.
ABLATION_MODES = {
    "A": AblationMode(use_cosine=False, use_location=False, use_spatial=False,
                      temporal="last"),
    "A+L": AblationMode(use_cosine=False, use_location=True, use_spatial=False,
                        temporal="last"),
    "A+L+S": AblationMode(use_cosine=False, use_location=True, use_spatial=True,
                          temporal="last"),
    "A+L+S+T": AblationMode(use_cosine=False, use_location=True, use_spatial=True,
                            temporal="attention"),
    "A+L+S+Avg": AblationMode(use_cosine=False, use_location=True, use_spatial=True,
                              temporal="avg"),
    "A+L+S+Max": AblationMode(use_cosine=False, use_location=True, use_spatial=True,
                              temporal="max"),
}
ABLATION_MODES["Avg"] = ABLATION_MODES["A+L+S+Avg"]
ABLATION_MODES["Max"] = ABLATION_MODES["A+L+S+Max"]


def resolve_mode(name: str | None) -> AblationMode:
    if name is None or name == "full":
        return FULL_MODE
    try:
        return ABLATION_MODES[name]
    except KeyError:
        raise InvalidArgument(
            f"unknown ablation {name!r}; choose from "
            f"{', '.join(k for k in ABLATION_MODES)} or omit for the full model"
        ) from None


def init_model(dims: ModelDims = ModelDims(), seed: int = 0) -> ParamStore:
    """Fresh parameter store: Glorot-uniform matrices, zero biases."""
    rng = np.random.default_rng(seed)
    store = ParamStore(seed=seed)
    d = dims.d_app
    d_v = d // dims.heads
    for h in range(dims.heads):
        store.add(f"spatial.Wq.h{h}", glorot_uniform(rng, (dims.d_key, d)))
        store.add(f"spatial.Wk.h{h}", glorot_uniform(rng, (dims.d_key, d)))
        store.add(f"spatial.Wv.h{h}", glorot_uniform(rng, (d_v, d)))
    store.add("geo.embed", geometry.embed_frequencies(dims.d_geo // 8))
    store.add("geo.linear", glorot_uniform(rng, (1, dims.d_geo)))
    store.add("geo.linear.b", np.zeros(1))
    store.add("temporal.wT", glorot_uniform(rng, (d,)))
    store.add("pair.Wr", glorot_uniform(rng, (dims.d_relation, 2 * d)))
    store.add("pair.Wc", glorot_uniform(rng, (dims.d_cos_proj, d)))
    store.add("loc.embed", geometry.embed_frequencies(dims.d_loc_embed // 16))
    store.add("loc.Wl", glorot_uniform(rng, (dims.d_loc, dims.d_loc_embed)))
    store.add("mot.embed", geometry.embed_frequencies(dims.d_mot_embed // 8))
    store.add("mot.Wm", glorot_uniform(rng, (dims.d_mot, dims.d_mot_embed)))
    store.add("head.Ws1", glorot_uniform(rng, (dims.d_hidden, PAIR_FEATURE_DIM)))
    store.add("head.Ws1.b", np.zeros(dims.d_hidden))
    store.add("head.Ws2", glorot_uniform(rng, (1, dims.d_hidden)))
    store.add("head.Ws2.b", np.zeros(1))
    return store


def model_dims(store: ParamStore) -> ModelDims:
    """Recover dimensions from parameter shapes (after loading a weights file)."""
    try:
        wr = store["pair.Wr"]
        wq = store["spatial.Wq.h0"]
        heads = sum(1 for n in store.names() if n.startswith("spatial.Wq.h"))
        return ModelDims(
            d_app=wr.shape[1] // 2,
            heads=heads,
            d_key=wq.shape[0],
            d_geo=store["geo.linear"].shape[1],
            d_relation=wr.shape[0],
            d_cos_proj=store["pair.Wc"].shape[0],
            d_loc=store["loc.Wl"].shape[0],
            d_mot=store["mot.Wm"].shape[0],
            d_loc_embed=store["loc.Wl"].shape[1],
            d_mot_embed=store["mot.Wm"].shape[1],
            d_hidden=store["head.Ws1"].shape[0],
        )
    except KeyError as exc:
        raise ValidationError(f"weights file is missing a parameter: {exc}") from None


def trainable_names(store: ParamStore):
    return [n for n in store.names() if n not in NON_TRAINABLE]


def param_leaves(store: ParamStore):
    """Differentiable leaves for trainable entries, constants for the rest."""
    out = {}
    for name, arr in store.items():
        out[name] = tape.constant(arr) if name in NON_TRAINABLE else tape.leaf(arr)
    return out


def param_constants(store: ParamStore):
    return {name: tape.constant(arr) for name, arr in store.items()}
