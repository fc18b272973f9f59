"""A small reverse-mode differentiation kernel over numpy arrays.

Every op returns a ``Node`` holding its value and a closure that pushes the
output gradient back to its parents. The recurrent and CRF layers are single
fused ops with hand-derived backward passes, which keeps the graph for one
sentence down to a few dozen nodes.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import _kernels
from . import crf as crf_math


class Node:
    __slots__ = ("value", "grad", "parents", "backward_fn", "name")

    def __init__(self, value, parents: Sequence["Node"] = (), backward_fn: Callable | None = None, name: str = ""):
        self.value = value
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g) -> None:
        # Incoming arrays are owned by the caller's finished backward step, so
        # they are stored without copying; ops that fan one array out copy it.
        if self.grad is None:
            self.grad = g
        else:
            self.grad = self.grad + g

    def __repr__(self) -> str:
        return f"Node({self.name or 'anon'}, shape={np.shape(self.value)})"


def parameter(value: np.ndarray, name: str = "") -> Node:
    return Node(np.asarray(value, dtype=np.float64), name=name)


def constant(value) -> Node:
    return Node(np.asarray(value, dtype=np.float64))


def backward(loss: Node) -> None:
    """Fill ``.grad`` of every node that ``loss`` depends on."""
    order: list[Node] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.value, dtype=np.float64)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


# -- elementary ops ---------------------------------------------------------------


def gather(table: Node, ids) -> Node:
    """Rows of ``table`` at integer ``ids`` (any shape); result shape ids.shape + (dim,)."""
    ids = np.asarray(ids, dtype=np.int64)
    n_rows = table.value.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= n_rows):
        raise IndexError(f"id out of range for table {table.name or ''} with {n_rows} rows")
    out = Node(table.value[ids], (table,))

    def bw(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.value)
        _kernels.scatter_add(table.grad, ids.reshape(-1), np.ascontiguousarray(g).reshape(-1, table.value.shape[1]))

    out.backward_fn = bw
    return out


def concat(nodes: Sequence[Node], axis: int = -1) -> Node:
    values = [n.value for n in nodes]
    out = Node(np.concatenate(values, axis=axis), nodes)
    sizes = np.cumsum([v.shape[axis] for v in values])[:-1]

    def bw(g):
        for n, part in zip(nodes, np.split(g, sizes, axis=axis)):
            n.accumulate(part)

    out.backward_fn = bw
    return out


def select(x: Node, index) -> Node:
    out = Node(x.value[index], (x,))

    def bw(g):
        full = np.zeros_like(x.value)
        full[index] = g
        x.accumulate(full)

    out.backward_fn = bw
    return out


def reshape(x: Node, shape) -> Node:
    out = Node(x.value.reshape(shape), (x,))
    out.backward_fn = lambda g: x.accumulate(g.reshape(x.value.shape))
    return out


def dropout(x: Node, rate: float, rng: np.random.Generator) -> Node:
    """Inverted dropout: kept units are scaled by 1 / (1 - rate)."""
    if rate <= 0:
        return x
    mask = (rng.random(x.value.shape) >= rate) / (1.0 - rate)
    out = Node(x.value * mask, (x,))
    out.backward_fn = lambda g: x.accumulate(g * mask)
    return out


def linear(x: Node, w: Node, b: Node) -> Node:
    out = Node(x.value @ w.value + b.value, (x, w, b))

    def bw(g):
        x2 = x.value.reshape(-1, x.value.shape[-1])
        g2 = g.reshape(-1, g.shape[-1])
        w.accumulate(x2.T @ g2)
        b.accumulate(g2.sum(axis=0))
        x.accumulate(g @ w.value.T)

    out.backward_fn = bw
    return out


def add(*nodes: Node) -> Node:
    out = Node(sum(n.value for n in nodes), nodes)

    def bw(g):
        for n in nodes:
            n.accumulate(g.copy())

    out.backward_fn = bw
    return out


# -- fused recurrent layer ---------------------------------------------------------


def lstm(x: Node, weights: Sequence[tuple[Node, Node, Node]], mask=None) -> Node:
    """Single-layer LSTMs over a stacked (K, T, N, D) input; returns hidden states (K, T, N, H).

    Slice k of the input is run through its own ``(W, U, b)`` from
    ``weights[k]``; stacking the two directions of a BiLSTM this way runs them
    in one pass. Gates are ordered input, forget, output, candidate. ``mask``
    (T, N) marks real steps; on padded steps the state is carried through
    unchanged, so row T - 1 holds each sequence's final state.
    """
    X = np.ascontiguousarray(x.value)
    K, T, N, _ = X.shape
    Ws = np.stack([w.value for w, _, _ in weights])
    Us = np.stack([u.value for _, u, _ in weights])
    bs = np.stack([b.value for _, _, b in weights])
    m = np.ones((T, N)) if mask is None else np.ascontiguousarray(mask, dtype=np.float64)
    hs, *cache = _kernels.lstm_forward(X, Ws, Us, bs, m)
    out = Node(hs, (x,) + tuple(p for triple in weights for p in triple))

    def bw(dH):
        dX, dW, dU, db = _kernels.lstm_backward(np.ascontiguousarray(dH), X, Ws, Us, m, *cache)
        for k, (w, u, b) in enumerate(weights):
            w.accumulate(dW[k])
            u.accumulate(dU[k])
            b.accumulate(db[k])
        x.accumulate(dX)

    out.backward_fn = bw
    return out


def stack(nodes: Sequence[Node]) -> Node:
    out = Node(np.stack([n.value for n in nodes]), nodes)

    def bw(g):
        for k, n in enumerate(nodes):
            n.accumulate(g[k])

    out.backward_fn = bw
    return out


# -- CRF loss ----------------------------------------------------------------------


def crf_nll(emissions: Node, transitions: Node, start: Node, stop: Node, gold: Sequence[int]) -> Node:
    """Negative log-likelihood of ``gold`` under a linear-chain CRF."""
    E, Tr, s, e = emissions.value, transitions.value, start.value, stop.value
    gold = np.asarray(gold, dtype=np.int64)
    alpha = crf_math.forward_scores(E, Tr, s)
    beta = crf_math.backward_scores(E, Tr, e)
    log_z = crf_math.logsumexp(alpha[-1] + e)
    nll = log_z - crf_math.path_score(E, Tr, s, e, gold)
    out = Node(np.array(nll), (emissions, transitions, start, stop))

    def bw(g):
        unary = np.exp(alpha + beta - log_z)
        dE = unary.copy()
        dE[np.arange(len(gold)), gold] -= 1.0
        pair = _kernels.crf_pair_marginals(E, Tr, alpha, beta, log_z)
        np.subtract.at(pair, (gold[:-1], gold[1:]), 1.0)
        d_start = unary[0].copy()
        d_start[gold[0]] -= 1.0
        d_stop = unary[-1].copy()
        d_stop[gold[-1]] -= 1.0
        emissions.accumulate(g * dE)
        transitions.accumulate(g * pair)
        start.accumulate(g * d_start)
        stop.accumulate(g * d_stop)

    out.backward_fn = bw
    return out
