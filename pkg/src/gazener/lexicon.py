"""Type-aggregated gaze lexicons.

A lexicon maps lower-cased word types to the mean of their occurrence
vectors. Occurrence vectors are the per-corpus normalized values, so several
corpora can be merged into one lexicon before it is rebinned.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import FormatError, Sentence, Token
from .gaze import FEATURE_NAMES, N_FEATURES, BinThresholds, apply_bins, fit_bins, unknown_vector

LEXICON_MAGIC = "#gazener-lexicon"
LEXICON_VERSION = 1


@dataclass
class TypeLexicon:
    entries: dict[str, np.ndarray]
    thresholds: BinThresholds
    source_corpora: tuple[str, ...] = ()
    _binned: dict[str, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    @property
    def bins(self) -> int:
        return self.thresholds.bins

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def binned(self, word: str) -> np.ndarray:
        key = word.lower()
        if key not in self.entries:
            return unknown_vector(self.bins)
        if key not in self._binned:
            self._binned[key] = apply_bins(self.entries[key], self.thresholds)
        return self._binned[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TypeLexicon):
            return NotImplemented
        return (
            self.thresholds == other.thresholds
            and self.source_corpora == other.source_corpora
            and self.entries.keys() == other.entries.keys()
            and all(np.array_equal(v, other.entries[k], equal_nan=True) for k, v in self.entries.items())
        )


def empty_lexicon(bins: int) -> TypeLexicon:
    return TypeLexicon({}, BinThresholds(bins, np.full((N_FEATURES, bins - 1), np.nan)), ())


def build_type_lexicon(
    corpora: Sequence[tuple[str, Sequence[Sentence], Sequence[np.ndarray]]], bins: int
) -> TypeLexicon:
    """Average occurrence vectors per lower-cased type across all given corpora.

    Each corpus is ``(corpus_id, sentences, vectors)`` where ``vectors`` has one
    (n_tokens, 17) array per sentence. NaN slots are averaged over the
    occurrences where the slot is known and stay NaN if it never is.
    """
    if not corpora or not any(len(s) for _, s, _ in corpora):
        raise ValueError("no tokens to build a lexicon from")
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, np.ndarray] = {}
    for _, sentences, vectors in corpora:
        for sent, arr in zip(sentences, vectors):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (len(sent), N_FEATURES):
                raise ValueError(f"sentence {sent.sent_id}: expected ({len(sent)}, {N_FEATURES}) vectors")
            known = ~np.isnan(arr)
            clean = np.where(known, arr, 0.0)
            for tok, v, k in zip(sent.tokens, clean, known):
                key = tok.surface.lower()
                if key in sums:
                    sums[key] += v
                    counts[key] += k
                else:
                    sums[key] = v.copy()
                    counts[key] = k.astype(np.int64)
    entries = {}
    for key in sorted(sums):
        with np.errstate(invalid="ignore", divide="ignore"):
            entries[key] = np.where(counts[key] > 0, sums[key] / counts[key], np.nan)
    thresholds = fit_bins(np.array(list(entries.values())), bins)
    sources = tuple(sorted({cid for cid, _, _ in corpora}))
    return TypeLexicon(entries, thresholds, sources)


def lookup_type_features(token: Token | str, lexicon: TypeLexicon) -> np.ndarray:
    word = token.surface if isinstance(token, Token) else token
    return lexicon.binned(word)


def lexicon_bins(sentences: Iterable[Sentence], lexicon: TypeLexicon) -> list[np.ndarray]:
    return [np.array([lexicon.binned(t.surface) for t in s.tokens]) for s in sentences]


def coverage(sentences: Iterable[Sentence], lexicon: TypeLexicon) -> float:
    """Fraction of tokens whose lower-cased form is in the lexicon."""
    total = hit = 0
    for s in sentences:
        for t in s.tokens:
            total += 1
            hit += t.surface.lower() in lexicon.entries
    return hit / total if total else 0.0


# -- file format --------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def format_lexicon(lex: TypeLexicon) -> str:
    lines = [
        f"{LEXICON_MAGIC} v{LEXICON_VERSION}",
        f"bins\t{lex.bins}",
        "features\t" + "\t".join(FEATURE_NAMES),
        "sources\t" + "\t".join(lex.source_corpora),
        f"types\t{len(lex.entries)}",
    ]
    for key in sorted(lex.entries):
        lines.append(key + "\t" + "\t".join(_fmt(v) for v in lex.entries[key]))
    lines.append("thresholds")
    for name, row in zip(FEATURE_NAMES, lex.thresholds.cuts):
        lines.append(name + "\t" + "\t".join(_fmt(c) for c in row))
    return "\n".join(lines) + "\n"


def parse_lexicon(text: str, path: str | Path | None = None) -> TypeLexicon:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    def expect(i: int, key: str) -> list[str]:
        if i >= len(lines):
            raise FormatError(f"missing {key!r} line", path, i + 1)
        parts = lines[i].split("\t")
        if parts[0] != key:
            raise FormatError(f"expected {key!r} line", path, i + 1)
        return parts[1:]

    if not lines or lines[0] != f"{LEXICON_MAGIC} v{LEXICON_VERSION}":
        raise FormatError("not a version-1 lexicon file", path, 1)
    bins = int(expect(1, "bins")[0])
    if tuple(expect(2, "features")) != FEATURE_NAMES:
        raise FormatError("feature list does not match", path, 3)
    sources = tuple(s for s in expect(3, "sources") if s)
    n_types = int(expect(4, "types")[0])
    entries = {}
    for i in range(5, 5 + n_types):
        if i >= len(lines):
            raise FormatError("truncated type section", path, i + 1)
        parts = lines[i].split("\t")
        if len(parts) != N_FEATURES + 1:
            raise FormatError(f"expected {N_FEATURES + 1} columns", path, i + 1)
        entries[parts[0]] = np.array([float(v) for v in parts[1:]])
    i = 5 + n_types
    expect(i, "thresholds")
    cuts = np.empty((N_FEATURES, bins - 1))
    for f, name in enumerate(FEATURE_NAMES):
        row = expect(i + 1 + f, name)
        if len(row) != bins - 1:
            raise FormatError(f"expected {bins - 1} cut points", path, i + 2 + f)
        cuts[f] = [float(v) for v in row]
    return TypeLexicon(entries, BinThresholds(bins, cuts), sources)


def save_lexicon(lex: TypeLexicon, path: str | Path) -> None:
    Path(path).write_text(format_lexicon(lex), encoding="utf-8")


def load_lexicon(path: str | Path) -> TypeLexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"), path)
