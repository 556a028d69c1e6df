"""Autodiff and optimizer checks.

Every differentiable primitive is compared against central finite
differences (step 1e-6, double precision). Adam is checked against its
closed-form first step and fixed-point behavior.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doakit import nn
from doakit.nn import (
    GruParams,
    Param,
    ParamStore,
    Tape,
    adam_step,
    backward,
    dense_forward,
    glorot_init,
    gru_step,
)


def numeric_grads(f, arrays, h=1e-6):
    out = []
    for idx in range(len(arrays)):
        g = np.zeros_like(arrays[idx])
        flat = g.ravel()
        for k in range(flat.size):
            up = [a.copy() for a in arrays]
            dn = [a.copy() for a in arrays]
            up[idx].ravel()[k] += h
            dn[idx].ravel()[k] -= h
            flat[k] = (f(up) - f(dn)) / (2 * h)
        out.append(g)
    return out


def tape_loss(op, arrays, w):
    tape = Tape()
    leaves = [tape.leaf(a) for a in arrays]
    y = op(tape, *leaves)
    loss = nn.mean_all(nn.mul(y, tape.leaf(w)))
    return tape, leaves, loss


def check_primitive(op, arrays, rel=1e-5, seed=0):
    rng = np.random.default_rng(seed)
    probe_tape = Tape()
    probe = op(probe_tape, *[probe_tape.leaf(a) for a in arrays])
    w = rng.standard_normal(probe.value.shape)

    def f(arrs):
        t = Tape()
        y = op(t, *[t.leaf(a) for a in arrs])
        return float(np.mean(y.value * w))

    tape, leaves, loss = tape_loss(op, arrays, w)
    backward(tape, loss)
    got = [l.grad if l.grad is not None else np.zeros_like(l.value) for l in leaves]
    want = numeric_grads(f, arrays)
    for g, n in zip(got, want):
        mask = np.abs(n) > 1e-8
        denom = max(np.linalg.norm(n), 1e-12)
        assert np.linalg.norm(g - n) / denom < rel, (g, n)
        np.testing.assert_allclose(g[~mask], n[~mask], atol=1e-6)


RNG = np.random.default_rng(1234)
CASES = [
    ("add", lambda t, a, b: nn.add(a, b), [RNG.standard_normal((3, 4)), RNG.standard_normal((3, 4))]),
    ("add_broadcast", lambda t, a, b: nn.add(a, b), [RNG.standard_normal((3, 4)), RNG.standard_normal(4)]),
    ("sub", lambda t, a, b: nn.sub(a, b), [RNG.standard_normal((2, 5)), RNG.standard_normal(5)]),
    ("mul", lambda t, a, b: nn.mul(a, b), [RNG.standard_normal((3, 4)), RNG.standard_normal((3, 4))]),
    ("mul_broadcast", lambda t, a, b: nn.mul(a, b), [RNG.standard_normal((2, 3, 4)), RNG.standard_normal((1, 4))]),
    ("scale", lambda t, a: nn.scale(a, -2.5), [RNG.standard_normal((4, 2))]),
    ("add_const", lambda t, a: nn.add_const(a, 3.0), [RNG.standard_normal(6)]),
    ("linear", lambda t, a, b: nn.linear(a, b), [RNG.standard_normal((5, 3)), RNG.standard_normal((4, 3))]),
    ("linear_vec", lambda t, a, b: nn.linear(a, b), [RNG.standard_normal(3), RNG.standard_normal((4, 3))]),
    ("sigmoid", lambda t, a: nn.sigmoid(a), [RNG.standard_normal((3, 3))]),
    ("tanh", lambda t, a: nn.tanh(a), [RNG.standard_normal((3, 3))]),
    ("relu", lambda t, a: nn.relu(a), [RNG.standard_normal((4, 4)) + 0.3]),
    ("reciprocal", lambda t, a: nn.reciprocal(a), [RNG.uniform(0.5, 2.0, (3, 4))]),
    ("transpose", lambda t, a: nn.transpose_last2(a), [RNG.standard_normal((2, 3, 4))]),
    ("reshape", lambda t, a: nn.reshape(a, (2, 6)), [RNG.standard_normal((3, 4))]),
    ("slice_last", lambda t, a: nn.slice_last(a, 1, 4), [RNG.standard_normal((2, 6))]),
    ("mean_all", lambda t, a: nn.mean_all(a), [RNG.standard_normal((3, 4))]),
    ("max_normalize", lambda t, a: nn.max_normalize_last(a), [RNG.uniform(0.2, 1.0, (3, 7))]),
    ("chain", lambda t, a, b: nn.tanh(nn.add(nn.linear(nn.sigmoid(a), b), 0.5)), [RNG.standard_normal((2, 3)), RNG.standard_normal((3, 3))]),
]


@pytest.mark.parametrize("name,op,arrays", CASES, ids=[c[0] for c in CASES])
def test_primitive_gradients_match_fd(name, op, arrays):
    check_primitive(op, arrays, seed=hash(name) % 2**32)


def test_relu_kink_subgradient_zero():
    # at exactly 0 the derivative is taken as 0
    tape = Tape()
    a = tape.leaf(np.array([0.0, -1.0, 2.0]))
    loss = nn.mean_all(nn.relu(a))
    backward(tape, loss)
    np.testing.assert_array_equal(a.grad, np.array([0.0, 0.0, 1.0 / 3.0]))


def test_max_normalize_relative_values():
    tape = Tape()
    a = tape.leaf(np.array([[1.0, 4.0, 2.0]]))
    y = nn.max_normalize_last(a)
    np.testing.assert_allclose(y.value, [[0.25, 1.0, 0.5]], atol=0)


# ----------------------------------------------------------------- tape


def test_backward_sum_of_param_is_ones():
    store = ParamStore()
    p = store.add("w", np.arange(6.0).reshape(2, 3))
    tape = Tape()
    loss = nn.mean_all(tape.watch(p))
    backward(tape, loss)
    # mean, so 1/size everywhere; scale to a sum via scale()
    np.testing.assert_allclose(p.grad, np.full((2, 3), 1.0 / 6.0), atol=0)
    store.zero_grad()
    tape = Tape()
    loss = nn.scale(nn.mean_all(tape.watch(p)), 6.0)
    backward(tape, loss)
    np.testing.assert_allclose(p.grad, np.ones((2, 3)), atol=0)


def test_disconnected_param_gets_exact_zero():
    store = ParamStore()
    used = store.add("used", np.ones(3))
    unused = store.add("unused", np.ones(4))
    tape = Tape()
    loss = nn.mean_all(tape.watch(used))
    backward(tape, loss)
    assert np.array_equal(unused.grad, np.zeros(4))
    assert np.count_nonzero(used.grad) == 3


def test_watch_same_param_twice_accumulates_once():
    store = ParamStore()
    p = store.add("p", np.array([2.0]))
    tape = Tape()
    n1 = tape.watch(p)
    n2 = tape.watch(p)
    assert n1 is n2
    loss = nn.mean_all(nn.mul(n1, n2))  # p^2 -> grad 2p
    backward(tape, loss)
    np.testing.assert_allclose(p.grad, [4.0], atol=0)


def test_backward_rejects_nonscalar_and_foreign_nodes():
    tape = Tape()
    vec = tape.leaf(np.ones(3))
    with pytest.raises(ValueError):
        backward(tape, vec)
    other = Tape()
    loss = nn.mean_all(other.leaf(np.ones(2)))
    with pytest.raises(ValueError):
        backward(tape, loss)


def test_gradients_bit_identical_across_replays():
    store = ParamStore()
    rng = np.random.default_rng(5)
    w = store.add("w", rng.standard_normal((4, 4)))
    b = store.add("b", rng.standard_normal(4))
    x = rng.standard_normal((8, 4))
    runs = []
    for _ in range(2):
        store.zero_grad()
        tape = Tape()
        y = dense_forward((w, b), x, "tanh", tape)
        backward(tape, nn.mean_all(y))
        runs.append((w.grad.copy(), b.grad.copy()))
    assert np.array_equal(runs[0][0], runs[1][0])
    assert np.array_equal(runs[0][1], runs[1][1])


# ----------------------------------------------------------------- blocks


def test_glorot_bound_and_variance():
    rng = np.random.default_rng(0)
    w = glorot_init(3, 3, rng)
    assert w.shape == (3, 3)
    assert np.all(np.abs(w) <= 1.0)
    big = glorot_init(40, 60, np.random.default_rng(1))
    draws = big.ravel()
    # top up to 1e5 draws for a tight variance estimate
    extra = glorot_init(40, 60, np.random.default_rng(2))
    for seed in range(3, 50):
        draws = np.concatenate([draws, glorot_init(40, 60, np.random.default_rng(seed)).ravel()])
        if draws.size >= 100_000:
            break
    want = 2.0 / (40 + 60)
    assert abs(np.var(draws) - want) / want < 0.05
    assert np.array_equal(
        glorot_init(5, 7, np.random.default_rng(9)), glorot_init(5, 7, np.random.default_rng(9))
    )
    with pytest.raises(ValueError):
        glorot_init(0, 3, rng)


def test_dense_identity_and_relu():
    store = ParamStore()
    w = store.add("w", np.eye(3))
    b = store.add("b", np.zeros(3))
    x = np.array([0.5, -1.0, 2.0])
    tape = Tape()
    y = dense_forward((w, b), x, "identity", tape)
    np.testing.assert_array_equal(y.value, x)
    y = dense_forward((w, b), np.array([-1.0, 2.0, 0.0]), "relu", Tape())
    np.testing.assert_array_equal(y.value, [0.0, 2.0, 0.0])
    with pytest.raises(ValueError):
        dense_forward((w, b), x, "softmax", Tape())
    with pytest.raises(ValueError):
        dense_forward((w, b), np.ones(4), "identity", Tape())


def test_dense_gradient_matches_fd():
    rng = np.random.default_rng(17)
    store = ParamStore()
    w = store.add("w", rng.standard_normal((3, 4)))
    b = store.add("b", rng.standard_normal(3))
    x = rng.standard_normal(4)

    def f(wv):
        t = Tape()
        st_ = ParamStore()
        y = dense_forward((st_.add("w", wv), st_.add("b", b.value)), x, "sigmoid", t)
        return float(nn.mean_all(y).value) * 3

    tape = Tape()
    loss = nn.scale(nn.mean_all(dense_forward((w, b), x, "sigmoid", tape)), 3.0)
    backward(tape, loss)
    want = numeric_grads(lambda arrs: f(arrs[0]), [w.value])[0]
    assert np.linalg.norm(w.grad - want) / np.linalg.norm(want) < 1e-6


def make_gru_params(store, hidden, din, rng=None, zero=False):
    def init(fo, fi):
        if zero:
            return np.zeros((fo, fi))
        return glorot_init(fi, fo, rng)

    fields = {}
    for gate in "zrh":
        fields[f"w_{gate}"] = store.add(f"w_{gate}", init(hidden, din))
        fields[f"u_{gate}"] = store.add(f"u_{gate}", init(hidden, hidden))
        fields[f"b_{gate}"] = store.add(f"b_{gate}", np.zeros(hidden))
    return GruParams(**fields)


def test_gru_zero_params_zero_state():
    store = ParamStore()
    params = make_gru_params(store, 4, 3, zero=True)
    h = gru_step(params, np.zeros(4), np.ones(3), Tape())
    np.testing.assert_array_equal(h.value, np.zeros(4))


def test_gru_saturated_update_gate_carries_state():
    store = ParamStore()
    params = make_gru_params(store, 4, 3, zero=True)
    params.b_z.value[...] = -50.0  # z ~ 0 -> h' ~ h
    h_prev = np.array([0.3, -0.7, 1.1, 0.0])
    h = gru_step(params, h_prev, np.zeros(3), Tape())
    np.testing.assert_allclose(h.value, h_prev, atol=1e-12)


def test_gru_shape_mismatch():
    store = ParamStore()
    params = make_gru_params(store, 4, 3, zero=True)
    with pytest.raises(ValueError):
        gru_step(params, np.zeros(4), np.zeros(5), Tape())


def test_gru_unroll_gradient_matches_fd():
    hidden, din, steps = 3, 2, 5
    rng = np.random.default_rng(23)
    store = ParamStore()
    params = make_gru_params(store, hidden, din, rng=rng)
    for p in store:
        if p.name.startswith("b"):
            p.value[...] = rng.standard_normal(p.value.shape) * 0.1
    xs = rng.standard_normal((steps, din))
    w_out = rng.standard_normal(hidden)

    def run(values):
        st_ = ParamStore()
        fields = {}
        for (name, _), v in zip(param_list, values):
            fields[name] = st_.add(name, v)
        ps = GruParams(**fields)
        t = Tape()
        h = t.leaf(np.zeros(hidden))
        for k in range(steps):
            h = gru_step(ps, h, xs[k], t)
        loss = nn.mean_all(nn.mul(h, t.leaf(w_out)))
        return t, st_, loss

    param_list = [(p.name, p.value) for p in store]
    tape, live_store, loss = run([v for _, v in param_list])
    backward(tape, loss)
    grads = {p.name: p.grad for p in live_store}
    want = numeric_grads(
        lambda arrs: float(run(arrs)[2].value), [v.copy() for _, v in param_list]
    )
    for (name, _), n in zip(param_list, want):
        denom = max(np.linalg.norm(n), 1e-12)
        assert np.linalg.norm(grads[name] - n) / denom < 1e-5, name


# ----------------------------------------------------------------- adam


def test_adam_first_step_closed_form():
    store = ParamStore()
    p = store.add("p", np.array([1.0, -2.0, 3.0]))
    g = np.array([0.4, -0.2, 0.0])
    p.grad[...] = g
    lr, eps = 1e-3, 1e-8
    before = p.value.copy()
    adam_step(store, lr, eps=eps, t=1)
    want = before - lr * g / (np.abs(g) + eps)
    np.testing.assert_allclose(p.value, want, atol=1e-15)
    assert np.array_equal(p.grad, np.zeros(3))  # zeroed after the step


def test_adam_constant_gradient_approaches_sign_step():
    store = ParamStore()
    p = store.add("p", np.zeros(2))
    g = np.array([3.0, -0.01])
    lr = 1e-3
    prev = p.value.copy()
    for t in range(1, 200):
        p.grad[...] = g
        adam_step(store, lr, t=t)
        if t > 150:
            step = p.value - prev
            np.testing.assert_allclose(step, -lr * np.sign(g), rtol=1e-3)
        prev = p.value.copy()


def test_adam_zero_gradient_keeps_params_decays_moments():
    store = ParamStore()
    p = store.add("p", np.array([1.0]))
    p.grad[...] = 1.0
    adam_step(store, 1e-3, t=1)
    v1 = p.value.copy()
    m1 = p.m1.copy()
    adam_step(store, 0.0, t=2)  # lr=0 is the identity on params
    np.testing.assert_array_equal(p.value, v1)
    p.grad[...] = 0.0
    adam_step(store, 1e-3, t=3)
    assert abs(p.m1[0]) < abs(m1[0])
    with pytest.raises(ValueError):
        adam_step(store, 1e-3, t=0)


def test_param_store_basics():
    store = ParamStore()
    store.add("a", np.zeros((2, 2)))
    store.add("b", np.zeros(3))
    assert store.total_size() == 7
    assert store.names() == ["a", "b"]
    assert "a" in store and "c" not in store
    with pytest.raises(ValueError):
        store.add("a", np.zeros(1))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dense_batch_equals_loop(seed):
    rng = np.random.default_rng(seed)
    store = ParamStore()
    w = store.add("w", rng.standard_normal((3, 5)))
    b = store.add("b", rng.standard_normal(3))
    xs = rng.standard_normal((4, 5))
    batched = dense_forward((w, b), xs, "tanh", Tape()).value
    for i in range(4):
        single = dense_forward((w, b), xs[i], "tanh", Tape()).value
        # batched and single matmuls may use different BLAS kernels, so
        # agreement is to rounding, not bit-exact
        np.testing.assert_allclose(batched[i], single, rtol=0, atol=1e-12)
