"""Parameter storage, the versioned weights file, and gradient checking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from . import tape
from .errors import InvalidArgument, ParseError, ValidationError

WEIGHTS_HEADER = "STRN-WEIGHTS v1"


@dataclass
class LinearLayer:
    """W x + b with an optional bias."""

    W: np.ndarray
    b: Optional[np.ndarray] = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.W.ndim != 2:
            raise InvalidArgument("LinearLayer.W must be 2-d")
        if self.b is not None:
            self.b = np.asarray(self.b, dtype=np.float64)
            if self.b.shape != (self.W.shape[0],):
                raise InvalidArgument(
                    f"bias shape {self.b.shape} != ({self.W.shape[0]},)")


def apply_linear(layer: LinearLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.W.shape[1]:
        raise InvalidArgument(
            f"input dim {x.shape[-1]} != layer input dim {layer.W.shape[1]}")
    y = x @ layer.W.T
    return y if layer.b is None else y + layer.b


class ParamStore:
    """Ordered name -> float64 array map with lossless text serialization."""

    def __init__(self, seed: Optional[int] = None):
        self._arrays: Dict[str, np.ndarray] = {}
        self.seed = seed

    def add(self, name: str, array):
        if name in self._arrays:
            raise InvalidArgument(f"duplicate parameter name {name!r}")
        a = np.asarray(array, dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise ValidationError(f"parameter {name!r} has non-finite entries")
        self._arrays[name] = a

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._arrays[name]
        except KeyError:
            raise KeyError(f"unknown parameter {name!r}") from None

    def __setitem__(self, name: str, array):
        if name not in self._arrays:
            raise KeyError(f"unknown parameter {name!r}")
        self._arrays[name] = np.asarray(array, dtype=np.float64)

    def __contains__(self, name):
        return name in self._arrays

    def names(self):
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def copy(self) -> "ParamStore":
        out = ParamStore(seed=self.seed)
        for name, a in self._arrays.items():
            out.add(name, a.copy())
        return out

    # -- serialization ------------------------------------------------------

    def dumps(self) -> str:
        lines = [WEIGHTS_HEADER]
        for name, a in self._arrays.items():
            dims = " ".join(str(d) for d in a.shape) if a.ndim else "0"
            lines.append(f"{name} {dims}")
            lines.append(" ".join(format(v, ".17g") for v in a.ravel()))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ParamStore":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != WEIGHTS_HEADER:
            raise ParseError(f"bad weights header, expected {WEIGHTS_HEADER!r}")
        store = cls()
        i = 1
        while i < len(lines):
            head = lines[i].split()
            if len(head) < 2:
                raise ParseError(f"malformed parameter header line {i + 1}")
            name = head[0]
            try:
                shape = tuple(int(d) for d in head[1:])
            except ValueError as exc:
                raise ParseError(f"bad shape on line {i + 1}: {exc}") from None
            shape = () if shape == (0,) else shape
            i += 1
            if i >= len(lines):
                raise ParseError(f"missing values for parameter {name!r}")
            try:
                vals = np.array([float(t) for t in lines[i].split()], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"bad values for {name!r}: {exc}") from None
            expected = int(np.prod(shape)) if shape else 1
            if vals.size != expected:
                raise ParseError(
                    f"parameter {name!r}: expected {expected} values, got {vals.size}")
            store.add(name, vals.reshape(shape))
            i += 1
        return store

    def save(self, path):
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ParamStore":
        with open(path, "r", encoding="ascii") as fh:
            return cls.loads(fh.read())


def glorot_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform init in ±sqrt(6 / (fan_in + fan_out)); vectors count as 1 x d."""
    if len(shape) == 1:
        fan_out, fan_in = 1, shape[0]
    else:
        fan_out, fan_in = shape[0], int(np.prod(shape[1:]))
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

def grad_check(store: ParamStore,
               loss_builder: Callable[[Dict[str, tape.Node]], tape.Node],
               names=None,
               entries_per_param: int = 4,
               h: float = 1e-5,
               seed: int = 0) -> Dict[str, float]:
    """Compare reverse-mode gradients against central finite differences.

    ``loss_builder`` receives a dict of parameter leaves (one per name) and
    must return the scalar loss node. For each checked parameter a few entries
    are sampled; the returned dict maps name -> max relative error
    |g_a - g_n| / max(1e-8, |g_a| + |g_n|) over the sampled entries.
    """
    names = list(names) if names is not None else store.names()
    rng = np.random.default_rng(seed)

    leaves = {n: tape.leaf(store[n]) for n in names}
    loss = loss_builder(leaves)
    base = float(np.asarray(loss.value))
    if not np.isfinite(base):
        raise ValidationError("loss is non-finite at the evaluation point")
    tape.backward(loss)

    def eval_loss() -> float:
        consts = {n: tape.constant(store[n]) for n in names}
        return float(np.asarray(loss_builder(consts).value))

    errors: Dict[str, float] = {}
    for name in names:
        arr = store[name]
        analytic = leaves[name].grad
        if analytic is None:
            analytic = np.zeros_like(arr)
        n_entries = min(entries_per_param, arr.size)
        idx = rng.choice(arr.size, size=n_entries, replace=False)
        worst = 0.0
        flat = arr.ravel()
        for j in idx:
            orig = flat[j]
            flat[j] = orig + h
            up = eval_loss()
            flat[j] = orig - h
            down = eval_loss()
            flat[j] = orig
            g_n = (up - down) / (2.0 * h)
            g_a = float(np.asarray(analytic).ravel()[j])
            err = abs(g_a - g_n) / max(1e-8, abs(g_a) + abs(g_n))
            worst = max(worst, err)
        errors[name] = worst
    return errors
