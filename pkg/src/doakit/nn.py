"""Reverse-mode autodiff over float64 numpy arrays, plus the few neural
building blocks the estimation pipeline needs: dense layers, a GRU cell,
Glorot initialization, and Adam.

The tape records nodes in creation order; iterating it in reverse is a
topological order, so backward is a single reverse sweep. Values are always
real arrays — complex quantities elsewhere travel as (real, imag) pairs and
enter the tape through custom primitives with hand-written adjoints. All
primitives accept leading batch axes; a lone vector is just the unbatched
special case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

ACTIVATIONS = ("identity", "relu", "tanh", "sigmoid")


class Node:
    """One tape entry: a value and how to push gradients to its parents."""

    __slots__ = ("value", "grad", "tape", "_parents", "_bwd")

    def __init__(self, value, tape, parents=(), bwd=None):
        self.value = value
        self.grad = None
        self.tape = tape
        self._parents = parents
        self._bwd = bwd

    def _accum(self, g):
        self.grad = g if self.grad is None else self.grad + g

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """Append-only operation record; reverse order replays all adjoints."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.watched: list[tuple["Param", Node]] = []
        self._watch_ids: dict[int, Node] = {}

    def node(self, value, parents=(), bwd=None) -> Node:
        n = Node(np.asarray(value, dtype=np.float64), self, parents, bwd)
        self.nodes.append(n)
        return n

    def leaf(self, value) -> Node:
        return self.node(value)

    def watch(self, param: "Param") -> Node:
        got = self._watch_ids.get(id(param))
        if got is not None:
            return got
        n = self.leaf(param.value)
        self._watch_ids[id(param)] = n
        self.watched.append((param, n))
        return n


def as_node(x, tape: Tape) -> Node:
    return x if isinstance(x, Node) else tape.leaf(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if keep:
        g = g.sum(axis=keep, keepdims=True)
    return g


# ------------------------------------------------------------- primitives


def add(a, b):
    tape = a.tape if isinstance(a, Node) else b.tape
    a, b = as_node(a, tape), as_node(b, tape)
    out = tape.node(a.value + b.value, (a, b))

    def bwd(g):
        a._accum(_unbroadcast(g, a.value.shape))
        b._accum(_unbroadcast(g, b.value.shape))

    out._bwd = bwd
    return out


def sub(a, b):
    tape = a.tape if isinstance(a, Node) else b.tape
    a, b = as_node(a, tape), as_node(b, tape)
    out = tape.node(a.value - b.value, (a, b))

    def bwd(g):
        a._accum(_unbroadcast(g, a.value.shape))
        b._accum(_unbroadcast(-g, b.value.shape))

    out._bwd = bwd
    return out


def mul(a, b):
    tape = a.tape if isinstance(a, Node) else b.tape
    a, b = as_node(a, tape), as_node(b, tape)
    out = tape.node(a.value * b.value, (a, b))

    def bwd(g):
        a._accum(_unbroadcast(g * b.value, a.value.shape))
        b._accum(_unbroadcast(g * a.value, b.value.shape))

    out._bwd = bwd
    return out


def scale(a: Node, c: float):
    out = a.tape.node(a.value * c, (a,))
    out._bwd = lambda g: a._accum(g * c)
    return out


def add_const(a: Node, c):
    out = a.tape.node(a.value + c, (a,))
    out._bwd = lambda g: a._accum(g)
    return out


def linear(x: Node, w: Node):
    """x @ w.T for x (..., d_in) and w (d_out, d_in)."""
    out = x.tape.node(x.value @ w.value.T, (x, w))

    def bwd(g):
        x._accum(g @ w.value)
        w._accum(np.einsum("...o,...i->oi", g, x.value, optimize=True))

    out._bwd = bwd
    return out


def sigmoid(a: Node):
    y = 1.0 / (1.0 + np.exp(-a.value))
    out = a.tape.node(y, (a,))
    out._bwd = lambda g: a._accum(g * y * (1.0 - y))
    return out


def tanh(a: Node):
    y = np.tanh(a.value)
    out = a.tape.node(y, (a,))
    out._bwd = lambda g: a._accum(g * (1.0 - y * y))
    return out


def relu(a: Node):
    y = np.maximum(a.value, 0.0)
    out = a.tape.node(y, (a,))
    out._bwd = lambda g: a._accum(g * (a.value > 0.0))
    return out


def reciprocal(a: Node):
    y = 1.0 / a.value
    out = a.tape.node(y, (a,))
    out._bwd = lambda g: a._accum(-g * y * y)
    return out


def transpose_last2(a: Node):
    out = a.tape.node(np.swapaxes(a.value, -1, -2), (a,))
    out._bwd = lambda g: a._accum(np.swapaxes(g, -1, -2))
    return out


def reshape(a: Node, shape):
    old = a.value.shape
    out = a.tape.node(a.value.reshape(shape), (a,))
    out._bwd = lambda g: a._accum(g.reshape(old))
    return out


def slice_last(a: Node, start: int, stop: int):
    out = a.tape.node(a.value[..., start:stop].copy(), (a,))

    def bwd(g):
        full = np.zeros_like(a.value)
        full[..., start:stop] = g
        a._accum(full)

    out._bwd = bwd
    return out


def mean_all(a: Node):
    out = a.tape.node(np.mean(a.value), (a,))
    out._bwd = lambda g: a._accum(np.full_like(a.value, g / a.value.size))
    return out


def max_normalize_last(a: Node):
    """Divide by the max over the last axis (positive inputs assumed)."""
    k = np.argmax(a.value, axis=-1)
    mx = np.take_along_axis(a.value, k[..., None], axis=-1)
    y = a.value / mx
    out = a.tape.node(y, (a,))

    def bwd(g):
        ga = g / mx
        dot = np.sum(g * a.value, axis=-1, keepdims=True)
        corr = np.zeros_like(a.value)
        np.put_along_axis(corr, k[..., None], dot / (mx * mx), axis=-1)
        a._accum(ga - corr)

    out._bwd = bwd
    return out


# --------------------------------------------------------------- backward


def backward(tape: Tape, loss_node: Node) -> None:
    """Accumulate d(loss)/d(param) into every watched parameter's buffer.

    Parameters not touched by the forward keep whatever is already in the
    buffer (zeros after a zero_grad), so disconnected groups see exact zeros.
    """
    if loss_node.value.size != 1:
        raise ValueError("loss node must be scalar")
    if loss_node.tape is not tape:
        raise ValueError("loss node does not belong to this tape")
    loss_node.grad = np.ones_like(loss_node.value)
    for node in reversed(tape.nodes):
        if node.grad is not None and node._bwd is not None:
            node._bwd(node.grad)
    for param, node in tape.watched:
        if node.grad is not None:
            param.grad += node.grad


# ------------------------------------------------------------- parameters


@dataclass
class Param:
    """A named trainable array with gradient and Adam moment buffers."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False)
    m1: np.ndarray = field(init=False)
    m2: np.ndarray = field(init=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.m1 = np.zeros_like(self.value)
        self.m2 = np.zeros_like(self.value)


class ParamStore:
    """Ordered, uniquely named parameter collection."""

    def __init__(self):
        self._params: dict[str, Param] = {}

    def add(self, name: str, value: np.ndarray) -> Param:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        p = Param(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def total_size(self) -> int:
        return sum(p.value.size for p in self)

    def zero_grad(self) -> None:
        for p in self:
            p.grad[...] = 0.0


def glorot_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform Glorot weights of shape (fan_out, fan_in)."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be positive")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    t: int = 1,
) -> None:
    """One Adam update with bias correction; gradients are zeroed after."""
    if t < 1:
        raise ValueError("step count must be >= 1")
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p in store:
        p.m1 = beta1 * p.m1 + (1.0 - beta1) * p.grad
        p.m2 = beta2 * p.m2 + (1.0 - beta2) * p.grad**2
        p.value -= lr * (p.m1 / c1) / (np.sqrt(p.m2 / c2) + eps)
        p.grad[...] = 0.0


# ------------------------------------------------------------- nn blocks


def dense_forward(params, x, activation: str, tape: Tape) -> Node:
    """activation(W x + b) where params = (weight Param, bias Param)."""
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation: {activation!r}")
    w_param, b_param = params
    x = as_node(x, tape)
    if x.value.shape[-1] != w_param.value.shape[1]:
        raise ValueError(
            f"input size {x.value.shape[-1]} != weight fan-in {w_param.value.shape[1]}"
        )
    w = tape.watch(w_param)
    b = tape.watch(b_param)
    y = add(linear(x, w), b)
    if activation == "relu":
        return relu(y)
    if activation == "tanh":
        return tanh(y)
    if activation == "sigmoid":
        return sigmoid(y)
    return y


class GruParams(NamedTuple):
    """The nine arrays of a standard GRU cell."""

    w_z: Param
    u_z: Param
    b_z: Param
    w_r: Param
    u_r: Param
    b_r: Param
    w_h: Param
    u_h: Param
    b_h: Param


def gru_step(params: GruParams, h_prev, x_t, tape: Tape) -> Node:
    """One GRU update: gates from (x_t, h_prev), convex state blend."""
    h = as_node(h_prev, tape)
    x = as_node(x_t, tape)
    hidden = params.u_z.value.shape[0]
    if x.value.shape[-1] != params.w_z.value.shape[1] or h.value.shape[-1] != hidden:
        raise ValueError(
            f"gru shapes: x {x.value.shape} h {h.value.shape} vs "
            f"W {params.w_z.value.shape} U {params.u_z.value.shape}"
        )
    w_z, u_z, b_z = (tape.watch(p) for p in (params.w_z, params.u_z, params.b_z))
    w_r, u_r, b_r = (tape.watch(p) for p in (params.w_r, params.u_r, params.b_r))
    w_h, u_h, b_h = (tape.watch(p) for p in (params.w_h, params.u_h, params.b_h))
    z = sigmoid(add(add(linear(x, w_z), linear(h, u_z)), b_z))
    r = sigmoid(add(add(linear(x, w_r), linear(h, u_r)), b_r))
    h_cand = tanh(add(add(linear(x, w_h), linear(mul(r, h), u_h)), b_h))
    return add(mul(sub(1.0, z), h), mul(z, h_cand))
