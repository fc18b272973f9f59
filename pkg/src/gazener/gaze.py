"""Eye-movement measures per word, reader averaging and quantile binning.

Raw vectors are float arrays of length 17 in the order of ``FEATURE_NAMES``.
Context slots that fall outside the sentence hold NaN; binning maps NaN to the
UNKNOWN index ``B``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import FixationEvent, Sentence, align_split_tokens, group_events

FEATURE_NAMES = (
    "n_fixations",
    "fixation_probability",
    "mean_fixation_duration",
    "first_fixation_duration",
    "first_pass_duration",
    "total_fixation_duration",
    "n_refixations",
    "reread_probability",
    "total_regression_from_duration",
    "w-2_fixation_probability",
    "w-1_fixation_probability",
    "w+1_fixation_probability",
    "w+2_fixation_probability",
    "w-2_fixation_duration",
    "w-1_fixation_duration",
    "w+1_fixation_duration",
    "w+2_fixation_duration",
)
N_FEATURES = len(FEATURE_NAMES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}
CONTEXT_OFFSETS = (-2, -1, 1, 2)
DEFAULT_BINS = 24


@dataclass(frozen=True)
class ReaderMeasures:
    """Measures of one reader on one word."""

    fixated: bool = False
    n_fixations: int = 0
    first_fixation_duration: float = 0.0
    first_pass_duration: float = 0.0
    total_duration: float = 0.0
    n_refixations: int = 0
    reread: bool = False
    regression_from_duration: float = 0.0


def reader_word_measures(
    events: Sequence[FixationEvent], word_index: int, n_words: int | None = None
) -> ReaderMeasures:
    """Measures for ``word_index`` from one reader's chronological fixations on a sentence.

    A regression from w is a saccade from w to an earlier word; its duration is
    the time spent on fixations from that saccade up to the next fixation that
    lands at or beyond w.
    """
    if n_words is not None and not 0 <= word_index < n_words:
        raise IndexError(f"word_index {word_index} outside sentence of {n_words} words")
    seq = sorted(events, key=lambda e: e.order)
    hits = [i for i, e in enumerate(seq) if e.word_index == word_index]
    if not hits:
        return ReaderMeasures()

    first = hits[0]
    first_pass = 0.0
    i = first
    while i < len(seq) and seq[i].word_index == word_index:
        first_pass += seq[i].duration
        i += 1

    regression = 0.0
    in_regression = False
    for prev, cur in zip(seq, seq[1:]):
        if prev.word_index == word_index and cur.word_index < word_index:
            in_regression = True
        elif cur.word_index >= word_index:
            in_regression = False
        if in_regression:
            regression += cur.duration

    n_fix = len(hits)
    return ReaderMeasures(
        fixated=True,
        n_fixations=n_fix,
        first_fixation_duration=seq[first].duration,
        first_pass_duration=first_pass,
        total_duration=sum(seq[i].duration for i in hits),
        n_refixations=n_fix - 1,
        reread=n_fix >= 2,
        regression_from_duration=regression,
    )


def average_readers(records: Sequence[ReaderMeasures], reader_count: int) -> np.ndarray:
    """Average per-reader records of one word into the word-local part of a raw vector.

    Durations and counts are averaged over fixating readers only. Context
    slots are left as NaN for ``add_context_features``.
    """
    if reader_count < 1:
        raise ValueError("reader_count must be at least 1")
    vec = np.full(N_FEATURES, np.nan)
    fixating = [r for r in records if r.fixated]
    k = len(fixating)
    vec[FEATURE_INDEX["fixation_probability"]] = k / reader_count
    vec[FEATURE_INDEX["reread_probability"]] = sum(r.reread for r in records) / reader_count
    if k:
        vec[FEATURE_INDEX["n_fixations"]] = sum(r.n_fixations for r in fixating) / k
        vec[FEATURE_INDEX["mean_fixation_duration"]] = sum(r.total_duration / r.n_fixations for r in fixating) / k
        vec[FEATURE_INDEX["first_fixation_duration"]] = sum(r.first_fixation_duration for r in fixating) / k
        vec[FEATURE_INDEX["first_pass_duration"]] = sum(r.first_pass_duration for r in fixating) / k
        vec[FEATURE_INDEX["total_fixation_duration"]] = sum(r.total_duration for r in fixating) / k
        vec[FEATURE_INDEX["n_refixations"]] = sum(r.n_refixations for r in fixating) / k
        vec[FEATURE_INDEX["total_regression_from_duration"]] = sum(r.regression_from_duration for r in fixating) / k
    else:
        for name in (
            "n_fixations",
            "mean_fixation_duration",
            "first_fixation_duration",
            "first_pass_duration",
            "total_fixation_duration",
            "n_refixations",
            "total_regression_from_duration",
        ):
            vec[FEATURE_INDEX[name]] = 0.0
    return vec


def neighbor_duration(vec: np.ndarray) -> float:
    """The duration a neighbouring word contributes to the context slots."""
    return vec[FEATURE_INDEX["mean_fixation_duration"]]


def add_context_features(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Fill the w-2..w+2 slots from neighbours; out-of-sentence slots stay NaN."""
    n = len(vectors)
    out = []
    for i, v in enumerate(vectors):
        v = np.array(v, dtype=float)
        for off in CONTEXT_OFFSETS:
            j = i + off
            p_slot = FEATURE_INDEX[f"w{off:+d}_fixation_probability"]
            d_slot = FEATURE_INDEX[f"w{off:+d}_fixation_duration"]
            if 0 <= j < n:
                v[p_slot] = vectors[j][FEATURE_INDEX["fixation_probability"]]
                v[d_slot] = neighbor_duration(vectors[j])
            else:
                v[p_slot] = v[d_slot] = np.nan
        out.append(v)
    return out


def sentence_group_features(
    sentence: Sentence, readers: Mapping[str, Sequence[FixationEvent]], reader_count: int
) -> list[np.ndarray]:
    """Raw vectors for each whitespace group of a sentence."""
    n = sentence.n_groups
    local = []
    for w in range(n):
        records = [reader_word_measures(seq, w, n) for seq in readers.values()]
        local.append(average_readers(records, reader_count))
    return add_context_features(local)


def featurize_corpus(
    sentences: Sequence[Sentence], events: Iterable[FixationEvent], reader_count: int | None = None
) -> list[np.ndarray]:
    """Token-level raw gaze arrays, one (n_tokens, 17) array per sentence.

    ``reader_count`` defaults to the number of distinct readers in ``events``;
    a reader who has no events for a sentence counts as skipping every word.
    """
    by_sent = group_events(events)
    if reader_count is None:
        reader_count = len({r for readers in by_sent.values() for r in readers}) or 1
    out = []
    for sent in sentences:
        groups = sentence_group_features(sent, by_sent.get(sent.sent_id, {}), reader_count)
        out.append(np.array(align_split_tokens(sent, dict(enumerate(groups)))))
    return out


# -- quantile bins --------------------------------------------------------------


@dataclass
class BinThresholds:
    """Per-feature cut points; ``cuts`` has shape (17, B - 1)."""

    bins: int
    cuts: np.ndarray

    @property
    def unknown(self) -> int:
        return self.bins

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BinThresholds)
            and self.bins == other.bins
            and np.array_equal(self.cuts, other.cuts, equal_nan=True)
        )

    def to_dict(self) -> dict:
        return {"bins": self.bins, "cuts": [[float(c) for c in row] for row in self.cuts]}

    @classmethod
    def from_dict(cls, d: dict) -> "BinThresholds":
        return cls(int(d["bins"]), np.array(d["cuts"], dtype=float).reshape(N_FEATURES, int(d["bins"]) - 1))


def fit_bins(vectors: np.ndarray | Sequence[np.ndarray], bins: int = DEFAULT_BINS) -> BinThresholds:
    """Cut points at the j/B empirical quantiles of each feature, ignoring NaN."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    data = _stack(vectors)
    if data.shape[0] == 0:
        raise ValueError("cannot fit bins on an empty corpus")
    cuts = np.empty((N_FEATURES, bins - 1))
    for f in range(N_FEATURES):
        col = data[:, f]
        col = np.sort(col[~np.isnan(col)])
        cuts[f] = _quantile_cuts(col, bins) if col.size else np.nan
    return BinThresholds(bins, cuts)


def _quantile_cuts(sorted_col: np.ndarray, bins: int) -> np.ndarray:
    """Linear-interpolation quantiles at j/B with the position (n-1)j/B kept exact.

    np.quantile forms that position in floating point, and a position that
    should be an integer can come out a hair low, moving one value into the
    next bin.
    """
    n = sorted_col.size
    j = np.arange(1, bins)
    k, rem = np.divmod((n - 1) * j, bins)
    lo = sorted_col[k]
    hi = sorted_col[np.minimum(k + 1, n - 1)]
    cut = np.where(rem == 0, lo, lo + (rem / bins) * (hi - lo))
    # interpolation must stay strictly below the upper neighbour
    over = (rem > 0) & (hi > lo) & (cut >= hi)
    cut[over] = np.nextafter(hi[over], -np.inf)
    return cut


def apply_bins(vectors: np.ndarray, thresholds: BinThresholds) -> np.ndarray:
    """Bin index = number of cut points strictly below the value; NaN -> UNKNOWN."""
    x = np.asarray(vectors, dtype=float)
    flat = x.reshape(-1, N_FEATURES)
    out = np.empty(flat.shape, dtype=np.int64)
    for f in range(N_FEATURES):
        cuts = thresholds.cuts[f]
        col = flat[:, f]
        if np.isnan(cuts).any():
            out[:, f] = thresholds.unknown
            continue
        idx = np.searchsorted(cuts, col, side="left")
        out[:, f] = np.minimum(idx, thresholds.bins - 1)
        out[np.isnan(col), f] = thresholds.unknown
    return out.reshape(x.shape)


def unknown_vector(bins: int) -> np.ndarray:
    return np.full(N_FEATURES, bins, dtype=np.int64)


def _stack(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return vectors.reshape(-1, N_FEATURES).astype(float)
    parts = [np.asarray(v, dtype=float).reshape(-1, N_FEATURES) for v in vectors]
    if not parts:
        return np.empty((0, N_FEATURES))
    return np.concatenate(parts)


def check_raw_vector(vec: np.ndarray) -> list[str]:
    """Names of violated raw-vector invariants (empty when the vector is consistent)."""
    problems = []
    g = lambda name: vec[FEATURE_INDEX[name]]  # noqa: E731
    ff, fp, tot = g("first_fixation_duration"), g("first_pass_duration"), g("total_fixation_duration")
    if not (tot >= fp - 1e-9 and fp >= ff - 1e-9 and ff >= 0):
        problems.append("duration ordering")
    for i, name in enumerate(FEATURE_NAMES):
        v = vec[i]
        if math.isnan(v):
            if not name.startswith("w"):
                problems.append(f"{name} missing")
            continue
        if v < 0:
            problems.append(f"{name} negative")
        if "probability" in name and v > 1:
            problems.append(f"{name} above 1")
    return problems
