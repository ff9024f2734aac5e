"""Array primitives and reverse-mode gradients."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strn import tape
from strn.errors import InvalidArgument


def finite_diff(f, x, h=1e-6):
    """Central-difference gradient of a scalar function of a flat array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gf = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f(x)
        flat[i] = orig - h
        down = f(x)
        flat[i] = orig
        gf[i] = (up - down) / (2 * h)
    return g


# ---------------------------------------------------------------------------
# plain-array primitives
# ---------------------------------------------------------------------------

class TestSoftmax:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(tape.softmax([0.0, 0.0]), [0.5, 0.5])

    def test_known_values(self):
        got = tape.softmax([1.0, 2.0, 3.0])
        np.testing.assert_allclose(got, [0.09003, 0.24473, 0.66524], atol=1e-5)

    def test_shift_invariance(self):
        v = np.array([0.3, -1.2, 4.0, 2.2])
        np.testing.assert_allclose(tape.softmax(v), tape.softmax(v + 17.5),
                                   atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgument):
            tape.softmax([])

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_sums_to_one_nonnegative(self, vals):
        s = tape.softmax(vals)
        assert np.all(s >= 0)
        assert abs(s.sum() - 1.0) < 1e-9


class TestWeightedSoftmax:
    def test_unit_gates_reduce_to_softmax(self):
        v = np.array([0.1, 2.0, -3.0])
        np.testing.assert_allclose(tape.weighted_softmax(v, np.ones(3)),
                                   tape.softmax(v), atol=1e-12)

    def test_one_hot_gate(self):
        w = tape.weighted_softmax([5.0, -2.0, 9.0], [0.0, 1.0, 0.0])
        np.testing.assert_allclose(w, [0.0, 1.0, 0.0])

    def test_known_values(self):
        w = tape.weighted_softmax([1.0, 2.0], [2.0, 1.0])
        np.testing.assert_allclose(w, [0.42388, 0.57612], atol=1e-5)

    def test_all_zero_gates_uniform(self):
        w = tape.weighted_softmax([3.0, 1.0, 0.0, -1.0], np.zeros(4))
        np.testing.assert_allclose(w, 0.25)

    def test_negative_gate_rejected(self):
        with pytest.raises(InvalidArgument):
            tape.weighted_softmax([1.0, 2.0], [1.0, -0.5])

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_sums_to_one_random(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.integers(1, 25)
        logits = rng.uniform(-100, 100, n)
        gates = rng.uniform(0, 3, n) * rng.integers(0, 2, n)
        w = tape.weighted_softmax(logits, gates)
        assert np.all(w >= 0)
        assert abs(w.sum() - 1.0) < 1e-9


class TestCosine:
    def test_identical(self):
        v = np.array([0.3, -2.0, 1.0])
        assert tape.cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert tape.cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_known_value(self):
        assert tape.cosine([1, 2, 2], [2, 1, 2]) == pytest.approx(8 / 9)

    def test_zero_norm_guard(self):
        assert tape.cosine([1e-13, 0.0], [1.0, 1.0]) == 0.0

    def test_clamped(self):
        v = np.full(40, 0.731)
        assert abs(tape.cosine(v, v)) <= 1.0

    def test_dim_mismatch(self):
        with pytest.raises(InvalidArgument):
            tape.cosine([1.0, 2.0], [1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# node gradients vs finite differences
# ---------------------------------------------------------------------------

def check_grad(build, x0, rtol=1e-6, atol=1e-8):
    """build(leaf) -> scalar node; compares backward() to finite differences."""
    x0 = np.asarray(x0, dtype=np.float64)
    lf = tape.leaf(x0)
    out = build(lf)
    tape.backward(out)
    num = finite_diff(lambda x: float(np.asarray(build(tape.constant(x)).value)), x0.copy())
    np.testing.assert_allclose(lf.grad, num, rtol=rtol, atol=atol)


def test_matmul_vector_grad():
    rng = np.random.default_rng(0)
    w = rng.standard_normal((3, 4))
    check_grad(lambda x: tape.nsum(tape.matmul(tape.constant(w),
                                               tape.reshape(x, (4,)))),
               rng.standard_normal(4))


def test_matmul_matrix_grad_both_sides():
    rng = np.random.default_rng(1)
    a0 = rng.standard_normal((3, 4))
    b0 = rng.standard_normal((4, 2))
    la, lb = tape.leaf(a0), tape.leaf(b0)
    out = tape.nsum(tape.mul(tape.matmul(la, lb), tape.matmul(la, lb)))
    tape.backward(out)

    def f_a(a):
        return float(tape.nsum(tape.mul(tape.matmul(tape.constant(a), tape.constant(b0)),
                                        tape.matmul(tape.constant(a), tape.constant(b0)))).value)

    np.testing.assert_allclose(la.grad, finite_diff(f_a, a0.copy()), rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("op", [
    lambda x: tape.nsum(tape.relu(x)),
    lambda x: tape.nsum(tape.sigmoid_node(x)),
    lambda x: tape.nmean(tape.mul(x, x)),
    lambda x: tape.nsum(tape.softmax_vec(tape.reshape(x, (6,)))),
    lambda x: tape.dot(tape.reshape(x, (6,)),
                       tape.softmax_vec(tape.reshape(x, (6,)))),
])
def test_elementwise_grads(op):
    rng = np.random.default_rng(2)
    check_grad(op, rng.standard_normal(6) + 0.05)


def test_softmax_rows_grad():
    rng = np.random.default_rng(3)
    x0 = rng.standard_normal((4, 5))
    w = rng.standard_normal((4, 5))
    check_grad(lambda x: tape.nsum(tape.mul(tape.softmax_rows(x), tape.constant(w))), x0)


def test_weighted_softmax_rows_grads():
    rng = np.random.default_rng(4)
    logits0 = rng.standard_normal((3, 4))
    gates0 = rng.uniform(0.1, 2.0, (3, 4))
    w = rng.standard_normal((3, 4))

    check_grad(lambda l: tape.nsum(tape.mul(
        tape.weighted_softmax_rows(l, tape.constant(gates0)), tape.constant(w))), logits0)
    check_grad(lambda g: tape.nsum(tape.mul(
        tape.weighted_softmax_rows(tape.constant(logits0), g), tape.constant(w))), gates0)


def test_weighted_softmax_rows_gate_grad_with_zeros():
    # gradient wrt gates is defined (and checked) even when some gates are 0
    rng = np.random.default_rng(5)
    logits0 = rng.standard_normal((2, 4))
    gates0 = np.array([[0.5, 0.0, 1.2, 0.3], [0.0, 0.0, 2.0, 1.0]])
    w = rng.standard_normal((2, 4))
    check_grad(lambda g: tape.nsum(tape.mul(
        tape.weighted_softmax_rows(tape.constant(logits0), g), tape.constant(w))), gates0)


def test_cosine_rows_grad():
    rng = np.random.default_rng(6)
    a0 = rng.standard_normal((3, 5))
    b0 = rng.standard_normal((3, 5))
    w = rng.standard_normal(3)
    check_grad(lambda a: tape.dot(tape.cosine_rows(a, tape.constant(b0)),
                                  tape.constant(w)), a0)
    check_grad(lambda b: tape.dot(tape.cosine_rows(tape.constant(a0), b),
                                  tape.constant(w)), b0)


def test_bce_with_logits_grad_and_value():
    z0 = np.array([-3.0, 0.0, 2.5])
    y = np.array([1.0, 0.0, 1.0])
    lf = tape.leaf(z0)
    loss = tape.nmean(tape.bce_with_logits(lf, y))
    expected = np.mean([np.log1p(np.exp(3.0)), np.log(2.0), np.log1p(np.exp(-2.5))])
    assert float(loss.value) == pytest.approx(expected, rel=1e-12)
    tape.backward(loss)
    num = finite_diff(lambda z: float(tape.nmean(
        tape.bce_with_logits(tape.constant(z), y)).value), z0.copy())
    np.testing.assert_allclose(lf.grad, num, rtol=1e-6, atol=1e-9)


def test_structural_ops_grads():
    rng = np.random.default_rng(7)
    x0 = rng.standard_normal((4, 3))

    def build(x):
        r = tape.row(x, 2)
        stacked = tape.stack_rows([r, r, tape.row(x, 0)])
        pooled = tape.max_axis0(x)
        sel = tape.gather(tape.reshape(x, (12,)), np.array([0, 5, 5, 11]))
        pieces = tape.concat_cols([stacked, tape.transpose(stacked)])
        return tape.add(tape.nsum(pieces),
                        tape.add(tape.nsum(pooled), tape.nsum(sel)))

    check_grad(build, x0)


def test_add_rowvec_grad():
    rng = np.random.default_rng(8)
    m0 = rng.standard_normal((5, 3))
    b0 = rng.standard_normal(3)
    check_grad(lambda b: tape.nsum(tape.relu(
        tape.add_rowvec(tape.constant(m0), b))), b0)


def test_constants_skip_backward():
    c = tape.constant(np.ones(3))
    out = tape.nsum(c)
    assert not out.needs
    tape.backward(out)  # no-op
    assert c.grad is None


def test_backward_requires_scalar():
    lf = tape.leaf(np.ones(3))
    with pytest.raises(InvalidArgument):
        tape.backward(tape.mul(lf, lf))


def test_fanout_accumulation():
    lf = tape.leaf(np.array([2.0]))
    y = tape.add(tape.mul(lf, lf), tape.mul(lf, lf))
    tape.backward(tape.nsum(y))
    np.testing.assert_allclose(lf.grad, [8.0])
