"""Exact-span NER scoring and paired significance testing."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .corpus import ENTITY_CLASSES


def extract_spans(labels: Sequence[str]) -> set[tuple[str, int, int]]:
    """(class, start, end) spans, end inclusive. A stray I-X opens a new span."""
    spans = set()
    cls = None
    start = 0
    for i, lab in enumerate(list(labels) + ["O"]):
        prefix, _, c = lab.partition("-")
        continues = prefix == "I" and c == cls
        if cls is not None and not continues:
            spans.add((cls, start, i - 1))
            cls = None
        if prefix in ("B", "I") and not continues:
            cls, start = c, i
    return spans


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, other: "Counts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn

    @property
    def scores(self) -> tuple[float, float, float]:
        return prf(self.tp, self.fp, self.fn)


@dataclass
class EvalReport:
    counts: dict[str, Counts]
    micro: Counts
    fold_f: list[float] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.micro.scores[0]

    @property
    def recall(self) -> float:
        return self.micro.scores[1]

    @property
    def f1(self) -> float:
        return self.micro.scores[2]

    def per_class(self) -> dict[str, tuple[float, float, float]]:
        return {c: self.counts[c].scores for c in self.counts}


def evaluate(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]], classes=ENTITY_CLASSES) -> EvalReport:
    """Micro and per-class P/R/F over exactly matching spans."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    counts = {c: Counts() for c in classes}
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {i}: {len(g)} gold labels but {len(p)} predicted")
        gs, ps = extract_spans(g), extract_spans(p)
        tp = Counter(s[0] for s in gs & ps)
        fp = Counter(s[0] for s in ps - gs)
        fn = Counter(s[0] for s in gs - ps)
        for c in set(tp) | set(fp) | set(fn):
            counts.setdefault(c, Counts()).add(Counts(tp[c], fp[c], fn[c]))
    micro = Counts()
    for c in counts.values():
        micro.add(c)
    return EvalReport(counts, micro)


@dataclass
class Significance:
    t: float
    p_value: float
    df: int
    mean_difference: float
    alpha: float = 0.05

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


def significance_test(baseline: Sequence[float], augmented: Sequence[float], alpha: float = 0.05) -> Significance:
    """One-sided paired t-test, H1: augmented > baseline."""
    a = np.asarray(baseline, dtype=float)
    b = np.asarray(augmented, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    if a.size < 2:
        raise ValueError("need at least 2 paired folds")
    d = b - a
    df = d.size - 1
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean > 0:
            return Significance(np.inf, 0.0, df, mean, alpha)
        if mean < 0:
            return Significance(-np.inf, 1.0, df, mean, alpha)
        return Significance(0.0, 0.5, df, mean, alpha)
    t = mean / (sd / np.sqrt(d.size))
    return Significance(float(t), float(stats.t.sf(t, df)), df, mean, alpha)
