"""Reference implementations the package is checked against.

They share no code with the package: brute-force enumeration for the CRF,
a dictionary group-by for the lexicon, span sets for the metrics and central
finite differences for gradients.
"""
import itertools
import math
from collections import defaultdict

import numpy as np


def brute_force_crf(emissions, transitions, start, stop):
    """(log partition, best path) by scoring every label sequence.

    Among exactly tied best paths the one chosen is the smallest when compared
    from the last position backwards: lowest final label, then lowest
    predecessor, and so on, which is what lowest-index backpointers produce.
    """
    n, L = emissions.shape
    paths = np.array(list(itertools.product(range(L), repeat=n)), dtype=np.int64).reshape(-1, n)
    scores = start[paths[:, 0]] + stop[paths[:, -1]] + emissions[np.arange(n), paths].sum(axis=1)
    if n > 1:
        scores = scores + transitions[paths[:, :-1], paths[:, 1:]].sum(axis=1)
    m = scores.max()
    log_z = float(m + math.log(math.fsum(np.exp(scores - m))))
    best = min((tuple(p) for p in paths[scores == m]), key=lambda p: p[::-1])
    return log_z, [int(y) for y in best]


def group_by_mean(corpora):
    """{lower-cased type: mean occurrence vector}, NaN-aware per slot."""
    rows = defaultdict(list)
    for _, sentences, vectors in corpora:
        for sent, arr in zip(sentences, vectors):
            for tok, v in zip(sent.tokens, arr):
                rows[tok.surface.lower()].append(np.asarray(v, dtype=float))
    out = {}
    for key, vs in rows.items():
        stacked = np.vstack(vs)
        col = []
        for f in range(stacked.shape[1]):
            known = [x for x in stacked[:, f] if not math.isnan(x)]
            col.append(math.fsum(known) / len(known) if known else math.nan)
        out[key] = np.array(col)
    return out


def span_set(labels):
    """Spans from IOB labels by a direct scan; a stray I- starts a span."""
    spans = []
    i = 0
    while i < len(labels):
        lab = labels[i]
        if lab == "O":
            i += 1
            continue
        cls = lab[2:]
        j = i + 1
        while j < len(labels) and labels[j] == "I-" + cls:
            j += 1
        spans.append((cls, i, j - 1))
        i = j
    return set(spans)


def span_prf(gold_seqs, pred_seqs):
    tp = fp = fn = 0
    for g, p in zip(gold_seqs, pred_seqs):
        gs, ps = span_set(g), span_set(p)
        tp += len(gs & ps)
        fp += len(ps - gs)
        fn += len(gs - ps)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def finite_difference_errors(params, loss_fn, h=1e-4):
    """Relative error ||analytic - numeric|| / (||analytic|| + ||numeric||) per parameter.

    ``params`` maps names to nodes whose ``.grad`` already holds the analytic
    gradient; ``loss_fn()`` recomputes the scalar loss from current values.
    """
    errors = {}
    for name, node in params.items():
        analytic = node.grad if node.grad is not None else np.zeros_like(node.value)
        numeric = np.zeros_like(node.value)
        for idx in np.ndindex(node.value.shape):
            keep = node.value[idx]
            node.value[idx] = keep + h
            up = loss_fn()
            node.value[idx] = keep - h
            down = loss_fn()
            node.value[idx] = keep
            numeric[idx] = (up - down) / (2 * h)
        denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
        errors[name] = float(np.linalg.norm(analytic - numeric) / denom) if denom > 1e-10 else 0.0
    return errors
