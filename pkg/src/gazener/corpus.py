"""Reading, validating and writing corpus files.

Token files are tab-separated, one token per line::

    # corpus_id = dundee
    # sent_id = 0
    John	0	B-PERSON
    's	0	O
    left	1	O

Columns are surface form, whitespace-group index and IOB label. A blank line
ends a sentence. Fixation files are CSV with the header
``reader_id,sent_id,word_index,order,duration_ms``.
"""
from __future__ import annotations

import csv
import io
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

ENTITY_CLASSES = ("PERSON", "ORGANIZATION", "LOCATION")
LABELS = ("O",) + tuple(f"{p}-{c}" for c in ENTITY_CLASSES for p in "BI")
CLASS_ALIASES = {"PER": "PERSON", "ORG": "ORGANIZATION", "LOC": "LOCATION"}

FIXATION_HEADER = ("reader_id", "sent_id", "word_index", "order", "duration_ms")

_DIGIT = re.compile(r"\d")


class FormatError(ValueError):
    """Raised for malformed or inconsistent input data."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


def normalize_digits(word: str) -> str:
    return _DIGIT.sub("0", word)


@dataclass(frozen=True)
class Token:
    surface: str
    label: str = "O"
    whitespace_group: int = 0

    @property
    def normalized(self) -> str:
        return normalize_digits(self.surface)


@dataclass(frozen=True)
class Sentence:
    corpus_id: str
    sent_id: int
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise FormatError(f"sentence {self.sent_id} has no tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.tokens]

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def n_groups(self) -> int:
        return self.tokens[-1].whitespace_group + 1

    def with_labels(self, labels: Sequence[str]) -> "Sentence":
        if len(labels) != len(self.tokens):
            raise ValueError("label count does not match token count")
        toks = tuple(Token(t.surface, lab, t.whitespace_group) for t, lab in zip(self.tokens, labels))
        return Sentence(self.corpus_id, self.sent_id, toks)


@dataclass(frozen=True)
class FixationEvent:
    reader_id: str
    sent_id: int
    word_index: int
    order: int
    duration: float


@dataclass
class TokenFile:
    """Parsed token file plus the number of IOB repairs that were applied."""

    sentences: list[Sentence]
    corpus_id: str
    repairs: int = 0
    # trailing columns per token (featurized corpora), one list per sentence
    extra: list[list[list[str]]] = field(default_factory=list)


@dataclass
class EmbeddingTable:
    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    skipped: int = 0

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


# -- labels ------------------------------------------------------------------


def canonical_label(label: str) -> str:
    """Map a label string to the closed tag set, accepting PER/ORG/LOC aliases."""
    if label == "O":
        return label
    prefix, sep, cls = label.partition("-")
    if sep and prefix in ("B", "I"):
        cls = CLASS_ALIASES.get(cls, cls)
        if cls in ENTITY_CLASSES:
            return f"{prefix}-{cls}"
    raise ValueError(f"unknown label {label!r}")


def is_valid_iob(labels: Sequence[str]) -> bool:
    prev = "O"
    for lab in labels:
        if lab.startswith("I-") and (prev == "O" or prev[2:] != lab[2:]):
            return False
        prev = lab
    return True


def repair_iob(labels: Sequence[str]) -> tuple[list[str], int]:
    """Turn every stray ``I-X`` into ``B-X``. Returns the labels and the repair count."""
    out = []
    repairs = 0
    prev = "O"
    for lab in labels:
        if lab.startswith("I-") and (prev == "O" or prev[2:] != lab[2:]):
            lab = "B-" + lab[2:]
            repairs += 1
        out.append(lab)
        prev = lab
    return out, repairs


# -- token files --------------------------------------------------------------


def parse_token_text(
    text: str,
    corpus_id: str | None = None,
    path: str | Path | None = None,
    extra_columns: int = 0,
    require_labels: bool = True,
) -> TokenFile:
    """Parse the tab-separated token format.

    Rows are ``surface, whitespace group, label`` followed by exactly
    ``extra_columns`` further fields. With ``require_labels=False`` a row may
    omit the label (and any extras), in which case it is tagged ``O``.
    """
    sentences: list[Sentence] = []
    extras: list[list[list[str]]] = []
    rows: list[tuple[str, int, str]] = []
    row_extra: list[list[str]] = []
    header_corpus = None
    pending_id: int | None = None
    next_id = 0
    repairs = 0
    seen_ids: set[int] = set()

    def flush(lineno: int):
        nonlocal rows, row_extra, pending_id, next_id, repairs
        if not rows:
            return
        sid = pending_id if pending_id is not None else next_id
        if sid in seen_ids:
            raise FormatError(f"duplicate sent_id {sid}", path, lineno)
        seen_ids.add(sid)
        labels, n = repair_iob([r[2] for r in rows])
        repairs += n
        toks = tuple(Token(s, lab, g) for (s, g, _), lab in zip(rows, labels))
        sentences.append(Sentence(corpus_id or header_corpus or "corpus", sid, toks))
        extras.append(row_extra)
        next_id = sid + 1
        rows = []
        row_extra = []
        pending_id = None

    lineno = 0
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            key, eq, value = line[1:].partition("=")
            key = key.strip()
            if eq and key == "sent_id":
                if rows:
                    raise FormatError("sent_id comment inside a sentence", path, lineno)
                try:
                    pending_id = int(value.strip())
                except ValueError:
                    raise FormatError(f"bad sent_id {value.strip()!r}", path, lineno) from None
            elif eq and key == "corpus_id":
                header_corpus = value.strip()
            continue
        cols = line.split("\t")
        width = 3 + extra_columns
        if not require_labels and len(cols) == 2:
            cols = cols + ["O"]
        elif len(cols) != width:
            raise FormatError(f"expected {width} tab-separated columns, got {len(cols)}", path, lineno)
        surface, group_str, label = cols[:3]
        try:
            group = int(group_str)
        except ValueError:
            raise FormatError(f"bad whitespace group {group_str!r}", path, lineno) from None
        try:
            label = canonical_label(label)
        except ValueError as exc:
            raise FormatError(str(exc), path, lineno) from None
        expected = rows[-1][1] if rows else 0
        if group not in (expected, expected + 1) or (not rows and group != 0):
            raise FormatError(
                f"whitespace group {group} does not continue the sentence (previous {expected})",
                path,
                lineno,
            )
        rows.append((surface, group, label))
        row_extra.append(cols[3:])
    flush(lineno)
    cid = corpus_id or header_corpus or "corpus"
    return TokenFile(sentences, cid, repairs, extras)


def parse_token_file(
    path: str | Path, corpus_id: str | None = None, extra_columns: int = 0, require_labels: bool = True
) -> TokenFile:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read token file: {exc}", path) from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"not valid UTF-8: {exc}", path) from None
    return parse_token_text(text, corpus_id, path, extra_columns, require_labels)


def format_sentences(sentences: Iterable[Sentence], corpus_id: str | None = None, extra=None) -> str:
    """Serialize sentences in canonical token-file form.

    ``extra`` optionally maps (sentence index, token index) to additional
    tab-separated columns; it is used for featurized corpora.
    """
    lines = []
    if corpus_id is not None:
        lines.append(f"# corpus_id = {corpus_id}")
    for si, sent in enumerate(sentences):
        lines.append(f"# sent_id = {sent.sent_id}")
        for ti, tok in enumerate(sent.tokens):
            row = f"{tok.surface}\t{tok.whitespace_group}\t{tok.label}"
            if extra is not None:
                row += "\t" + "\t".join(extra(si, ti))
            lines.append(row)
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def write_token_file(path: str | Path, sentences: Sequence[Sentence], corpus_id: str | None = None) -> None:
    if corpus_id is None and sentences:
        corpus_id = sentences[0].corpus_id
    Path(path).write_text(format_sentences(sentences, corpus_id), encoding="utf-8")


# -- fixation files -----------------------------------------------------------


def parse_fixation_file(path: str | Path, sentences: Sequence[Sentence]) -> list[FixationEvent]:
    """Read raw fixation events and check them against the parsed sentences."""
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read fixation file: {exc}", path) from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"not valid UTF-8: {exc}", path) from None
    return parse_fixation_text(text, sentences, path)


def parse_fixation_text(
    text: str, sentences: Sequence[Sentence], path: str | Path | None = None
) -> list[FixationEvent]:
    groups = {s.sent_id: s.n_groups for s in sentences}
    events: list[FixationEvent] = []
    seen: dict[tuple[str, int], set[int]] = defaultdict(set)
    with io.StringIO(text, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FIXATION_HEADER:
            raise FormatError(f"expected header {','.join(FIXATION_HEADER)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FIXATION_HEADER):
                raise FormatError(f"expected {len(FIXATION_HEADER)} columns, got {len(row)}", path, lineno)
            reader_id = row[0].strip()
            try:
                sent_id, word_index, order = int(row[1]), int(row[2]), int(row[3])
                duration = float(row[4])
            except ValueError:
                raise FormatError(f"unparseable row {row!r}", path, lineno) from None
            if not (duration > 0) or not math.isfinite(duration):
                raise FormatError(f"non-positive duration {row[4]}", path, lineno)
            if sent_id not in groups:
                raise FormatError(f"unknown sent_id {sent_id}", path, lineno)
            if not 0 <= word_index < groups[sent_id]:
                raise FormatError(f"word_index {word_index} out of range for sentence {sent_id}", path, lineno)
            orders = seen[(reader_id, sent_id)]
            if order in orders:
                raise FormatError(f"duplicate order {order} for reader {reader_id} sentence {sent_id}", path, lineno)
            orders.add(order)
            events.append(FixationEvent(reader_id, sent_id, word_index, order, duration))
    for (reader_id, sent_id), orders in seen.items():
        if orders != set(range(len(orders))):
            raise FormatError(f"orders for reader {reader_id} sentence {sent_id} are not 0..{len(orders) - 1}", path)
    events.sort(key=lambda e: (e.sent_id, e.reader_id, e.order))
    return events


def format_fixations(events: Iterable[FixationEvent]) -> str:
    lines = [",".join(FIXATION_HEADER)]
    for e in events:
        lines.append(f"{e.reader_id},{e.sent_id},{e.word_index},{e.order},{e.duration:g}")
    return "\n".join(lines) + "\n"


def group_events(events: Iterable[FixationEvent]) -> dict[int, dict[str, list[FixationEvent]]]:
    """Index events by sentence, then reader, each reader's list in chronological order."""
    out: dict[int, dict[str, list[FixationEvent]]] = defaultdict(lambda: defaultdict(list))
    for e in events:
        out[e.sent_id][e.reader_id].append(e)
    for readers in out.values():
        for seq in readers.values():
            seq.sort(key=lambda e: e.order)
    return out


def parse_averaged_gaze_file(path: str | Path, sentences: Sequence[Sentence]) -> dict[int, np.ndarray]:
    """Read pre-averaged per-word measures; returns sent_id -> (n_groups, 17) array.

    Empty cells and ``nan`` mean "unknown". Missing words raise.
    """
    from .gaze import FEATURE_NAMES

    path = Path(path)
    groups = {s.sent_id: s.n_groups for s in sentences}
    out = {sid: np.full((n, len(FEATURE_NAMES)), np.nan) for sid, n in groups.items()}
    filled = {sid: np.zeros(n, dtype=bool) for sid, n in groups.items()}
    expected = ("sent_id", "word_index") + FEATURE_NAMES
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != expected:
            raise FormatError("unexpected header for averaged gaze file", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise FormatError(f"expected {len(expected)} columns, got {len(row)}", path, lineno)
            try:
                sid, wi = int(row[0]), int(row[1])
                vals = [float(v) if v.strip() else math.nan for v in row[2:]]
            except ValueError:
                raise FormatError(f"unparseable row {row!r}", path, lineno) from None
            if sid not in groups or not 0 <= wi < groups[sid]:
                raise FormatError(f"no word {wi} in sentence {sid}", path, lineno)
            out[sid][wi] = vals
            filled[sid][wi] = True
    for sid, mask in filled.items():
        if not mask.all():
            raise FormatError(f"sentence {sid} lacks rows for words {np.flatnonzero(~mask).tolist()}", path)
    return out


# -- alignment ----------------------------------------------------------------


def align_split_tokens(sentence: Sentence, group_features: Mapping[int, np.ndarray]) -> list[np.ndarray]:
    """Give every token the feature vector of its whitespace group."""
    out = []
    for tok in sentence.tokens:
        try:
            out.append(group_features[tok.whitespace_group])
        except KeyError:
            raise KeyError(
                f"sentence {sentence.sent_id}: no features for whitespace group {tok.whitespace_group}"
            ) from None
    return out


# -- embeddings ---------------------------------------------------------------


def load_embeddings(path: str | Path, dimension: int) -> EmbeddingTable:
    try:
        text = Path(path).read_bytes().decode("utf-8", errors="replace")
    except OSError as exc:
        raise FormatError(f"cannot read embedding file: {exc}", path) from None
    return parse_embedding_text(text, dimension, path)


def parse_embedding_text(text: str, dimension: int, path: str | Path | None = None) -> EmbeddingTable:
    """Whitespace-separated ``word v1 ... vd`` rows; rows of the wrong arity are skipped."""
    table = EmbeddingTable(dimension)
    for line in text.splitlines():
        parts = line.rstrip().split(" ")
        if not parts[0]:
            continue
        if len(parts) != dimension + 1:
            table.skipped += 1
            continue
        try:
            vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
        except ValueError:
            table.skipped += 1
            continue
        table.entries[parts[0]] = vec
    if not table.entries:
        raise FormatError(f"no valid {dimension}-dimensional vectors found", path)
    return table


# -- statistics ---------------------------------------------------------------


@dataclass
class CorpusStats:
    n_sentences: int
    n_tokens: int
    n_types: int
    mean_sentence_length: float
    mean_word_length: float
    fixation_duration: float
    gaze_duration: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def corpus_stats(sentences: Sequence[Sentence], features: Sequence[np.ndarray] | None = None) -> CorpusStats:
    """Summary numbers in the layout of the usual corpus overview table.

    ``features`` holds one (n_tokens, 17) raw array per sentence. Fixation
    duration is the mean single-fixation duration and gaze duration the mean
    total fixation time, both over tokens that at least one reader fixated.
    """
    from .gaze import FEATURE_INDEX

    n_tok = sum(len(s) for s in sentences)
    words = [t.surface for s in sentences for t in s.tokens]
    fix = gaze = math.nan
    if features is not None and len(features):
        arr = np.concatenate([np.asarray(f, dtype=float) for f in features])
        seen = arr[:, FEATURE_INDEX["fixation_probability"]] > 0
        if seen.any():
            fix = float(arr[seen, FEATURE_INDEX["mean_fixation_duration"]].mean())
            gaze = float(arr[seen, FEATURE_INDEX["total_fixation_duration"]].mean())
    return CorpusStats(
        n_sentences=len(sentences),
        n_tokens=n_tok,
        n_types=len({w.lower() for w in words}),
        mean_sentence_length=n_tok / len(sentences) if sentences else 0.0,
        mean_word_length=sum(map(len, words)) / n_tok if n_tok else 0.0,
        fixation_duration=fix,
        gaze_duration=gaze,
    )
