"""Dense real-vector/matrix math and reverse-mode differentiation.

Two layers live here:

* plain numpy helpers (``softmax``, ``weighted_softmax``, ``cosine``, ...)
  that define the numerical behaviour once, and
* a small tape: every operation returns a :class:`Node` carrying the forward
  value, its parents and a vector-Jacobian closure. ``backward`` runs the
  reverse sweep. Values are float64 arrays; nodes whose subgraph contains no
  ``leaf`` are treated as constants and skipped during the sweep, so the same
  graph-building code doubles as the inference path.

Gradients of every composite built from these ops are validated against
central finite differences (see ``params.grad_check``).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import InvalidArgument

_TINY = 1e-300  # denominator guard for degenerate weighted softmax rows


# ---------------------------------------------------------------------------
# plain-array primitives
# ---------------------------------------------------------------------------

def as_array(x, name="input"):
    """Coerce to a float64 array and reject non-finite entries."""
    a = np.asarray(x, dtype=np.float64)
    if a.size == 0:
        raise InvalidArgument(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"{name} contains non-finite values")
    return a


def softmax(x, axis=-1):
    """Numerically stabilized softmax along ``axis``."""
    x = as_array(x, "softmax input")
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def weighted_softmax(logits, gates, axis=-1):
    """Gate-modulated softmax: g_j * exp(l_j) normalized over the axis.

    Rows whose gates are all zero fall back to the uniform distribution so the
    output always sums to one and never contains NaN.
    """
    logits = as_array(logits, "logits")
    gates = np.asarray(gates, dtype=np.float64)
    if gates.shape != logits.shape:
        raise InvalidArgument(
            f"gates shape {gates.shape} != logits shape {logits.shape}")
    if np.any(gates < 0):
        raise InvalidArgument("gates must be nonnegative")
    z = gates * np.exp(logits - logits.max(axis=axis, keepdims=True))
    total = z.sum(axis=axis, keepdims=True)
    n = logits.shape[axis]
    uniform = np.full_like(z, 1.0 / n)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(total > _TINY, z / np.where(total > _TINY, total, 1.0), uniform)
    return w


def cosine(u, v):
    """Cosine similarity with a zero-norm guard; result clamped to [-1, 1]."""
    u = as_array(u, "u")
    v = as_array(v, "v")
    if u.shape != v.shape:
        raise InvalidArgument(f"dim mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def sigmoid(x):
    return expit(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# tape
# ---------------------------------------------------------------------------

class Node:
    """One value in the computation graph."""

    __slots__ = ("value", "parents", "vjp", "grad", "needs")

    def __init__(self, value, parents=(), vjp=None, needs=False):
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.grad = None
        self.needs = needs

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f"Node(shape={self.shape}, needs={self.needs})"


def constant(x) -> Node:
    return Node(np.asarray(x, dtype=np.float64))


def leaf(x) -> Node:
    """A differentiable input; its ``grad`` is populated by ``backward``."""
    return Node(np.asarray(x, dtype=np.float64), needs=True)


def as_node(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _make(value, parents, vjp) -> Node:
    needs = any(p.needs for p in parents)
    return Node(value, parents if needs else (), vjp if needs else None, needs)


def backward(root: Node):
    """Reverse sweep from a scalar root, accumulating ``grad`` on leaves."""
    if np.size(root.value) != 1:
        raise InvalidArgument("backward root must be scalar")
    if not root.needs:
        return
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.needs:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    root.grad = np.ones_like(np.asarray(root.value))
    for node in reversed(order):
        if node.vjp is None or node.grad is None:
            continue
        grads = node.vjp(node.grad)
        for parent, g in zip(node.parents, grads):
            if g is None or not parent.needs:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g


# ---------------------------------------------------------------------------
# ops
# ---------------------------------------------------------------------------

def add(a: Node, b: Node) -> Node:
    return _make(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: Node, b: Node) -> Node:
    return _make(a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a: Node, b: Node) -> Node:
    av, bv = a.value, b.value
    return _make(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: Node, c: float) -> Node:
    return _make(a.value * c, (a,), lambda g: (g * c,))


def matmul(a: Node, b: Node) -> Node:
    av, bv = a.value, b.value
    y = av @ bv

    def vjp(g):
        if bv.ndim == 1:
            ga = np.outer(g, bv) if av.ndim == 2 else g * bv
        else:
            ga = g @ bv.T
        gb = av.T @ g
        return ga, gb

    return _make(y, (a, b), vjp)


def transpose(a: Node) -> Node:
    return _make(a.value.T, (a,), lambda g: (g.T,))


def add_rowvec(m: Node, b: Node) -> Node:
    """(B, n) + (n,) broadcast add."""
    return _make(m.value + b.value, (m, b), lambda g: (g, g.sum(axis=0)))


def relu(a: Node) -> Node:
    mask = a.value > 0
    return _make(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def sigmoid_node(a: Node) -> Node:
    s = expit(a.value)
    return _make(s, (a,), lambda g: (g * s * (1.0 - s),))


def softmax_vec(a: Node) -> Node:
    s = softmax(a.value)
    return _make(s, (a,), lambda g: (s * (g - np.dot(g, s)),))


def softmax_rows(a: Node) -> Node:
    s = softmax(a.value, axis=-1)

    def vjp(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _make(s, (a,), vjp)


def weighted_softmax_rows(logits: Node, gates: Node) -> Node:
    """Row-wise gated softmax with the uniform fallback for all-zero rows.

    Backward uses w = softmax(l + log g): d/dl is the usual softmax Jacobian
    expressed through w, and d/dg_m = (ḡ_m - Σ_j ḡ_j w_j) · e_m / Z.
    Degenerate (all-zero-gate) rows get zero gradient.
    """
    lv, gv = logits.value, gates.value
    e = np.exp(lv - lv.max(axis=-1, keepdims=True))
    z = gv * e
    total = z.sum(axis=-1, keepdims=True)
    ok = total > _TINY
    n = lv.shape[-1]
    w = np.where(ok, z / np.where(ok, total, 1.0), 1.0 / n)

    def vjp(g):
        gw = np.where(ok, g, 0.0)
        inner = (gw * w).sum(axis=-1, keepdims=True)
        gl = w * (gw - inner)
        gg = np.where(ok, (gw - inner) * e / np.where(ok, total, 1.0), 0.0)
        return gl, gg

    return _make(w, (logits, gates), vjp)


def cosine_rows(a: Node, b: Node) -> Node:
    """Row-wise cosine similarity of two (B, d) inputs, zero-norm guarded."""
    av, bv = a.value, b.value
    dots = (av * bv).sum(axis=1)
    na = np.linalg.norm(av, axis=1)
    nb = np.linalg.norm(bv, axis=1)
    bad = (na < 1e-12) | (nb < 1e-12)
    safe = np.where(bad, 1.0, na * nb)
    c = np.where(bad, 0.0, np.clip(dots / safe, -1.0, 1.0))

    def vjp(g):
        gg = np.where(bad, 0.0, g)
        ga = (gg / safe)[:, None] * bv - (gg * c / np.where(bad, 1.0, na ** 2))[:, None] * av
        gb = (gg / safe)[:, None] * av - (gg * c / np.where(bad, 1.0, nb ** 2))[:, None] * bv
        return ga, gb

    return _make(c, (a, b), vjp)


def bce_with_logits(z: Node, labels) -> Node:
    """Element-wise binary cross-entropy on logits, numerically stable."""
    y = np.asarray(labels, dtype=np.float64)
    zv = z.value
    loss = np.maximum(zv, 0.0) - zv * y + np.log1p(np.exp(-np.abs(zv)))
    return _make(loss, (z,), lambda g: (g * (expit(zv) - y),))


def concat_cols(nodes: Sequence[Node]) -> Node:
    """Concatenate (B, n_i) blocks along axis 1."""
    vals = [n.value for n in nodes]
    widths = [v.shape[1] for v in vals]
    splits = np.cumsum(widths)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=1))

    return _make(np.concatenate(vals, axis=1), tuple(nodes), vjp)


def stack_rows(nodes: Sequence[Node]) -> Node:
    """Stack d-vectors into an (n, d) matrix."""
    def vjp(g):
        return tuple(g[i] for i in range(len(nodes)))

    return _make(np.stack([n.value for n in nodes]), tuple(nodes), vjp)


def row(m: Node, i: int) -> Node:
    shape = m.value.shape

    def vjp(g):
        out = np.zeros(shape)
        out[i] = g
        return (out,)

    return _make(m.value[i], (m,), vjp)


def reshape(a: Node, shape) -> Node:
    orig = a.value.shape
    return _make(a.value.reshape(shape), (a,), lambda g: (g.reshape(orig),))


def gather(v: Node, idx) -> Node:
    idx = np.asarray(idx, dtype=np.intp)
    size = v.value.shape

    def vjp(g):
        out = np.zeros(size)
        np.add.at(out, idx, g)
        return (out,)

    return _make(v.value[idx], (v,), vjp)


def nsum(a: Node) -> Node:
    shape = a.value.shape
    return _make(np.sum(a.value), (a,), lambda g: (np.full(shape, g),))


def nmean(a: Node) -> Node:
    size = a.value.size
    shape = a.value.shape
    return _make(np.mean(a.value), (a,), lambda g: (np.full(shape, g / size),))


def dot(u: Node, v: Node) -> Node:
    uv, vv = u.value, v.value
    return _make(np.dot(uv, vv), (u, v), lambda g: (g * vv, g * uv))


def max_axis0(m: Node) -> Node:
    """Column-wise max of an (n, d) matrix; gradient flows to the argmax row."""
    am = np.argmax(m.value, axis=0)
    cols = np.arange(m.value.shape[1])
    shape = m.value.shape

    def vjp(g):
        out = np.zeros(shape)
        out[am, cols] = g
        return (out,)

    return _make(m.value[am, cols], (m,), vjp)
