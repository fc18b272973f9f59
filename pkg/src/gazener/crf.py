"""Linear-chain CRF scoring, partition function and Viterbi decoding.

Conventions: ``emissions`` is (n, L); ``transitions[a, b]`` scores moving from
label a to label b; ``start`` and ``stop`` are (L,) boundary scores.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _kernels


def logsumexp(x: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return out.reshape(())[()]
    return np.squeeze(out, axis=axis)


def path_score(emissions, transitions, start, stop, path: Sequence[int]) -> float:
    path = np.asarray(path, dtype=np.int64)
    score = start[path[0]] + stop[path[-1]] + emissions[np.arange(len(path)), path].sum()
    if len(path) > 1:
        score += transitions[path[:-1], path[1:]].sum()
    return float(score)


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def forward_scores(emissions, transitions, start) -> np.ndarray:
    """alpha[t, y]: log-sum of all prefixes ending in y at t, emissions included."""
    return _kernels.crf_forward(_f64(emissions), _f64(transitions), _f64(start))


def backward_scores(emissions, transitions, stop) -> np.ndarray:
    """beta[t, y]: log-sum of all suffixes after t given y at t, stop score included."""
    return _kernels.crf_backward(_f64(emissions), _f64(transitions), _f64(stop))


def log_partition(emissions, transitions, start, stop) -> float:
    alpha = forward_scores(emissions, transitions, start)
    return float(logsumexp(alpha[-1] + stop))


def neg_log_likelihood(emissions, transitions, start, stop, gold) -> float:
    return log_partition(emissions, transitions, start, stop) - path_score(
        emissions, transitions, start, stop, gold
    )


def marginals(emissions, transitions, start, stop) -> np.ndarray:
    alpha = forward_scores(emissions, transitions, start)
    beta = backward_scores(emissions, transitions, stop)
    log_z = logsumexp(alpha[-1] + stop)
    return np.exp(alpha + beta - log_z)


def viterbi(emissions, transitions, start, stop) -> tuple[list[int], float]:
    """Best label path and its score. Ties go to the lowest label index."""
    path, score = _kernels.viterbi(_f64(emissions), _f64(transitions), _f64(start), _f64(stop))
    return [int(y) for y in path], float(score)
