"""Cross-validation, cross-corpus and external-corpus experiment protocols."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import ENTITY_CLASSES, FixationEvent, FormatError, Sentence, format_sentences, parse_token_text
from .gaze import DEFAULT_BINS, N_FEATURES, BinThresholds, apply_bins, featurize_corpus, fit_bins
from .lexicon import TypeLexicon, build_type_lexicon, coverage, lexicon_bins
from .metrics import Counts, EvalReport, Significance, evaluate, significance_test
from .model import DivergenceError, ModelConfig, TaggerModel, Vocabulary, train_step
from .corpus import EmbeddingTable

log = logging.getLogger(__name__)

FEATURE_MODES = ("none", "token", "type_individual", "type_combined")
CROSS_MODES = ("none", "token", "type")


# -- featurized corpora ---------------------------------------------------------------


@dataclass
class FeaturizedCorpus:
    """Sentences plus token-level raw gaze vectors and their per-corpus bins.

    ``raw`` and ``bins`` are None for corpora without recorded gaze. A corpus
    read back from a featurized file has bins but no raw values. ``source`` is
    "lexicon" when the bins came from type-lexicon lookups instead of fixations.
    """

    corpus_id: str
    sentences: list[Sentence]
    raw: list[np.ndarray] | None = None
    thresholds: BinThresholds | None = None
    bins: list[np.ndarray] | None = None
    n_bins: int = DEFAULT_BINS
    source: str = "fixations"

    @classmethod
    def from_events(
        cls,
        corpus_id: str,
        sentences: Sequence[Sentence],
        events: Sequence[FixationEvent],
        n_bins: int = DEFAULT_BINS,
        reader_count: int | None = None,
    ) -> "FeaturizedCorpus":
        raw = featurize_corpus(sentences, events, reader_count)
        thresholds = fit_bins(raw, n_bins)
        return cls(corpus_id, list(sentences), raw, thresholds, [apply_bins(r, thresholds) for r in raw], n_bins)

    @classmethod
    def from_lexicon(cls, corpus_id: str, sentences: Sequence[Sentence], lexicon: TypeLexicon) -> "FeaturizedCorpus":
        bins = lexicon_bins(sentences, lexicon)
        return cls(corpus_id, list(sentences), None, None, bins, lexicon.thresholds.bins, "lexicon")

    @property
    def has_gaze(self) -> bool:
        return self.bins is not None

    def normalized(self) -> list[np.ndarray]:
        """Per-corpus quantile-normalized values (bin positions, UNKNOWN as NaN)."""
        if self.bins is None:
            raise ValueError(f"corpus {self.corpus_id} has no gaze features")
        unknown = self.n_bins
        return [np.where(b == unknown, np.nan, b.astype(float)) for b in self.bins]

    def subset(self, indices: Sequence[int]) -> "FeaturizedCorpus":
        pick = lambda xs: None if xs is None else [xs[i] for i in indices]  # noqa: E731
        return FeaturizedCorpus(
            self.corpus_id, pick(self.sentences), pick(self.raw), self.thresholds, pick(self.bins), self.n_bins, self.source
        )

    def __len__(self) -> int:
        return len(self.sentences)


def format_featurized(corpus: FeaturizedCorpus) -> str:
    """Token-file rows followed by the 17 bin indices (UNKNOWN = bins)."""
    if corpus.bins is None:
        raise ValueError(f"corpus {corpus.corpus_id} has no gaze features to write")
    head = f"# bins = {corpus.n_bins}\n# source = {corpus.source}\n"
    body = format_sentences(
        corpus.sentences, corpus.corpus_id, extra=lambda si, ti: [str(int(v)) for v in corpus.bins[si][ti]]
    )
    return head + body


def parse_featurized(text: str, path=None) -> FeaturizedCorpus:
    meta = {}
    for line in text.split("\n"):
        if not line.startswith("#"):
            break
        key, eq, value = line[1:].partition("=")
        if eq:
            meta[key.strip()] = value.strip()
    try:
        n_bins = int(meta["bins"])
    except (KeyError, ValueError):
        raise FormatError("featurized corpus lacks a '# bins = B' header", path, 1) from None
    tf = parse_token_text(text, path=path, extra_columns=N_FEATURES)
    bins = []
    for sent, rows in zip(tf.sentences, tf.extra):
        try:
            arr = np.array([[int(v) for v in r] for r in rows], dtype=np.int64).reshape(len(sent), N_FEATURES)
        except ValueError:
            raise FormatError(f"sentence {sent.sent_id}: non-integer bin index", path) from None
        if arr.size and (arr.min() < 0 or arr.max() > n_bins):
            raise FormatError(f"sentence {sent.sent_id}: bin index outside 0..{n_bins}", path)
        bins.append(arr)
    return FeaturizedCorpus(tf.corpus_id, tf.sentences, None, None, bins, n_bins, meta.get("source", "fixations"))


def lexicon_from(corpora: Sequence[FeaturizedCorpus], n_bins: int) -> TypeLexicon:
    return build_type_lexicon([(c.corpus_id, c.sentences, c.normalized()) for c in corpora], n_bins)


# -- fold plans -----------------------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    fold_id: int
    train: tuple[int, ...]
    dev: tuple[int, ...]
    test: tuple[int, ...]


def make_folds(n_sentences: int, k: int = 10, seed: int = 0) -> list[FoldPlan]:
    """Shuffled k-fold plan over sentence positions: slice i tests, slice i+1 is dev."""
    if k < 3:
        raise ValueError("need at least 3 folds for train/dev/test")
    if n_sentences < k:
        raise ValueError(f"corpus of {n_sentences} sentences is too small for {k} folds")
    order = np.random.default_rng(seed).permutation(n_sentences)
    slices = [tuple(int(i) for i in s) for s in np.array_split(order, k)]
    plans = []
    for i in range(k):
        dev_i = (i + 1) % k
        train = tuple(x for j, s in enumerate(slices) if j not in (i, dev_i) for x in s)
        plans.append(FoldPlan(i, train, slices[dev_i], slices[i]))
    return plans


def make_cross_folds(n_target: int, n_folds: int = 5, seed: int = 0) -> list[FoldPlan]:
    """Alternating dev/test plans over a target corpus: one slice dev, the rest test.

    ``train`` is empty; the source corpus is used whole for training.
    """
    if n_target < n_folds:
        raise ValueError(f"target corpus of {n_target} sentences is too small for {n_folds} folds")
    order = np.random.default_rng(seed).permutation(n_target)
    slices = [tuple(int(i) for i in s) for s in np.array_split(order, n_folds)]
    return [
        FoldPlan(i, (), slices[i], tuple(x for j, s in enumerate(slices) if j != i for x in s))
        for i in range(n_folds)
    ]


# -- training ---------------------------------------------------------------------------


class EarlyStopping:
    """Tracks the best dev score; earliest epoch wins ties."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record ``score`` for ``epoch``; True when training should stop."""
        if score > self.best:
            self.best, self.best_epoch, self.bad_epochs = score, epoch, 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


@dataclass
class Example:
    sentence: Sentence
    gaze: np.ndarray | None = None


@dataclass
class TrainResult:
    best_epoch: int
    best_dev_f: float
    epochs_run: int
    history: list[tuple[int, float, float]]  # (epoch, mean train loss, dev F)
    best_state: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def predict(model: TaggerModel, examples: Sequence[Example]) -> list[list[str]]:
    return [model.decode(model.prepare(ex.sentence, ex.gaze)) for ex in examples]


def train_with_early_stopping(
    model: TaggerModel,
    train: Sequence[Example],
    dev: Sequence[Example],
    max_epochs: int = 100,
    patience: int = 20,
    seed: int = 0,
) -> TrainResult:
    """Per-sentence SGD; keeps the parameters of the best dev-F epoch and restores them."""
    if not train or not dev:
        raise ValueError("training and development sets must be non-empty")
    rng = np.random.default_rng([seed, 7])
    inputs = [(model.prepare(ex.sentence, ex.gaze), model.gold_ids(ex.sentence.labels)) for ex in train]
    dev_inputs = [model.prepare(ex.sentence, ex.gaze) for ex in dev]
    dev_gold = [ex.sentence.labels for ex in dev]
    stopper = EarlyStopping(patience)
    best_state = model.state()
    history = []
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        total = 0.0
        for idx in rng.permutation(len(inputs)):
            inp, gold = inputs[idx]
            try:
                total += train_step(model, inp, gold, rng)
            except DivergenceError as exc:
                last = history[-1][0] if history else 0
                raise DivergenceError(f"{exc} in epoch {epoch} (last finite epoch {last})") from None
        dev_f = evaluate(dev_gold, [model.decode(i) for i in dev_inputs]).f1
        history.append((epoch, total / len(inputs), dev_f))
        log.debug("epoch %d loss %.4f dev F %.4f", epoch, total / len(inputs), dev_f)
        improved = dev_f > stopper.best
        stop = stopper.update(epoch, dev_f)
        if improved:
            best_state = model.state()
        if stop:
            break
    model.load_state(best_state)
    return TrainResult(stopper.best_epoch, stopper.best, epoch, history, best_state)


# -- experiment configuration -----------------------------------------------------------


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    k_folds: int = 10
    cross_folds: int = 5
    max_epochs: int = 100
    patience: int = 20
    seed: int = 0
    n_jobs: int = 1

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "model"}
        d["model"] = self.model.to_dict()
        return d


def desk_scale_config(seed: int = 0, n_jobs: int = 1) -> ExperimentConfig:
    """Smaller layers and a short epoch budget for single-machine synthetic runs."""
    model = ModelConfig(
        char_embed_dim=10, char_lstm_hidden=10, word_embed_dim=32, word_lstm_hidden=32, learning_rate=0.05, seed=seed
    )
    return ExperimentConfig(model=model, max_epochs=15, patience=5, seed=seed, n_jobs=n_jobs)


@dataclass
class FoldTask:
    fold_id: int
    train: list[Example]
    dev: list[Example]
    test: list[Example]
    model_config: ModelConfig
    max_epochs: int
    patience: int
    seed: int
    embeddings: EmbeddingTable | None = None


@dataclass
class FoldResult:
    fold_id: int
    report: EvalReport
    best_epoch: int
    epochs_run: int
    best_dev_f: float
    predictions: list[list[str]] = field(repr=False, default_factory=list)


def run_fold(task: FoldTask) -> FoldResult:
    vocab = Vocabulary.build([ex.sentence for ex in task.train], task.embeddings)
    model = TaggerModel(task.model_config, vocab, task.embeddings)
    result = train_with_early_stopping(model, task.train, task.dev, task.max_epochs, task.patience, task.seed)
    preds = predict(model, task.test)
    report = evaluate([ex.sentence.labels for ex in task.test], preds)
    return FoldResult(task.fold_id, report, result.best_epoch, result.epochs_run, result.best_dev_f, preds)


def _run_tasks(tasks: Sequence[FoldTask], n_jobs: int) -> list[FoldResult]:
    if n_jobs <= 1 or len(tasks) <= 1:
        return [run_fold(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(run_fold, tasks))


# -- reports -----------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    """Fold results of one model variant; corpus-level numbers are unweighted fold means."""

    name: str
    folds: list[FoldResult]
    meta: dict = field(default_factory=dict)

    def _mean(self, fn) -> float:
        return float(np.mean([fn(f.report) for f in self.folds]))

    @property
    def precision(self) -> float:
        return self._mean(lambda r: r.precision)

    @property
    def recall(self) -> float:
        return self._mean(lambda r: r.recall)

    @property
    def f1(self) -> float:
        return self._mean(lambda r: r.f1)

    @property
    def fold_f(self) -> list[float]:
        return [f.report.f1 for f in self.folds]

    def per_class(self) -> dict[str, tuple[float, float, float]]:
        out = {}
        for c in ENTITY_CLASSES:
            scores = np.array([f.report.counts.get(c, Counts()).scores for f in self.folds])
            out[c] = tuple(float(x) for x in scores.mean(axis=0))
        return out

    def pooled(self) -> EvalReport:
        counts = {c: Counts() for c in ENTITY_CLASSES}
        micro = Counts()
        for f in self.folds:
            for c, n in f.report.counts.items():
                counts.setdefault(c, Counts()).add(n)
            micro.add(f.report.micro)
        return EvalReport(counts, micro, self.fold_f)

    def csv_rows(self) -> list[list]:
        rows = []
        for f in self.folds:
            r = f.report
            row = [self.name, f.fold_id, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}"]
            for c in ENTITY_CLASSES:
                row += [f"{x:.6f}" for x in r.counts.get(c, Counts()).scores]
            row += [r.micro.tp, r.micro.fp, r.micro.fn, f.best_epoch, f.epochs_run]
            rows.append(row)
        return rows


CSV_HEADER = (
    ["model", "fold", "precision", "recall", "f1"]
    + [f"{c}_{m}" for c in ENTITY_CLASSES for m in ("p", "r", "f")]
    + ["tp", "fp", "fn", "best_epoch", "epochs_run"]
)


def reports_csv(reports: Sequence[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rep in reports:
        w.writerows(rep.csv_rows())
    return buf.getvalue()


def reports_table(reports: Sequence[ExperimentReport], title: str = "") -> str:
    """Model rows with mean P, R and F (percentages), as in a results table."""
    width = max([len(r.name) for r in reports] + [5])
    lines = [title] if title else []
    lines.append(f"{'model':<{width}}  {'P':>6}  {'R':>6}  {'F':>6}")
    for r in reports:
        lines.append(f"{r.name:<{width}}  {100 * r.precision:6.2f}  {100 * r.recall:6.2f}  {100 * r.f1:6.2f}")
    return "\n".join(lines) + "\n"


def per_class_table(reports: Sequence[ExperimentReport]) -> str:
    """Class x model rows with mean P, R and F."""
    width = max([len(r.name) for r in reports] + [5])
    lines = [f"{'class':<12}  {'model':<{width}}  {'P':>6}  {'R':>6}  {'F':>6}"]
    for c in ENTITY_CLASSES:
        for r in reports:
            p, rc, f = r.per_class()[c]
            lines.append(f"{c:<12}  {r.name:<{width}}  {100 * p:6.2f}  {100 * rc:6.2f}  {100 * f:6.2f}")
    return "\n".join(lines) + "\n"


def compare(baseline: ExperimentReport, augmented: ExperimentReport, alpha: float = 0.05) -> Significance:
    return significance_test(baseline.fold_f, augmented.fold_f, alpha)


# -- protocols --------------------------------------------------------------------------


def _examples(corpus: FeaturizedCorpus, indices: Sequence[int], gaze: list[np.ndarray] | None) -> list[Example]:
    return [Example(corpus.sentences[i], None if gaze is None else gaze[i]) for i in indices]


def _mode_config(config: ExperimentConfig, use_gaze: bool) -> ModelConfig:
    return replace(config.model, use_gaze=use_gaze)


def run_individual_experiment(
    corpus: FeaturizedCorpus,
    feature_mode: str,
    config: ExperimentConfig,
    lexicon: TypeLexicon | None = None,
    embeddings: EmbeddingTable | None = None,
) -> ExperimentReport:
    """k-fold cross-validation on one corpus.

    Every mode uses the same fold plan and per-fold model seeds, so runs of
    different modes can be compared fold by fold.
    """
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
    if feature_mode == "token" and not corpus.has_gaze:
        raise ValueError("token mode needs a corpus with recorded gaze")
    if feature_mode == "type_combined" and lexicon is None:
        raise ValueError("type_combined mode needs a combined lexicon")
    if feature_mode == "type_individual" and not corpus.has_gaze:
        raise ValueError("type_individual mode needs a corpus with recorded gaze")
    start = time.perf_counter()
    plans = make_folds(len(corpus), config.k_folds, config.seed)
    gaze_all = None
    if feature_mode == "token":
        gaze_all = corpus.bins
    elif feature_mode == "type_combined":
        gaze_all = lexicon_bins(corpus.sentences, lexicon)
    tasks = []
    for plan in plans:
        gaze = gaze_all
        if feature_mode == "type_individual":
            fold_lex = lexicon_from([corpus.subset(plan.train)], config.model.gaze_bins)
            gaze = lexicon_bins(corpus.sentences, fold_lex)
        tasks.append(
            FoldTask(
                plan.fold_id,
                _examples(corpus, plan.train, gaze),
                _examples(corpus, plan.dev, gaze),
                _examples(corpus, plan.test, gaze),
                _mode_config(config, feature_mode != "none"),
                config.max_epochs,
                config.patience,
                config.seed + plan.fold_id,
                embeddings,
            )
        )
    folds = _run_tasks(tasks, config.n_jobs)
    meta = {"protocol": "cv", "corpus": corpus.corpus_id, "seconds": time.perf_counter() - start}
    return ExperimentReport(feature_mode, folds, meta)


def run_cross_experiment(
    train_corpus: FeaturizedCorpus,
    target_corpus: FeaturizedCorpus,
    feature_mode: str,
    config: ExperimentConfig,
    lexicon: TypeLexicon | None = None,
    embeddings: EmbeddingTable | None = None,
) -> ExperimentReport:
    """Train on all of one corpus; alternate dev/test splits of another."""
    if feature_mode not in CROSS_MODES:
        raise ValueError(f"feature_mode must be one of {CROSS_MODES}")
    if feature_mode == "type" and lexicon is None:
        raise ValueError("type mode needs a combined lexicon")
    if feature_mode == "token" and not (train_corpus.has_gaze and target_corpus.has_gaze):
        raise ValueError("token mode needs recorded gaze for both corpora")
    start = time.perf_counter()
    if feature_mode == "token":
        src_gaze, tgt_gaze = train_corpus.bins, target_corpus.bins
    elif feature_mode == "type":
        src_gaze = lexicon_bins(train_corpus.sentences, lexicon)
        tgt_gaze = lexicon_bins(target_corpus.sentences, lexicon)
    else:
        src_gaze = tgt_gaze = None
    train = _examples(train_corpus, range(len(train_corpus)), src_gaze)
    tasks = []
    for plan in make_cross_folds(len(target_corpus), config.cross_folds, config.seed):
        tasks.append(
            FoldTask(
                plan.fold_id,
                train,
                _examples(target_corpus, plan.dev, tgt_gaze),
                _examples(target_corpus, plan.test, tgt_gaze),
                _mode_config(config, feature_mode != "none"),
                config.max_epochs,
                config.patience,
                config.seed + plan.fold_id,
                embeddings,
            )
        )
    folds = _run_tasks(tasks, config.n_jobs)
    meta = {
        "protocol": "cross",
        "train": train_corpus.corpus_id,
        "target": target_corpus.corpus_id,
        "seconds": time.perf_counter() - start,
    }
    return ExperimentReport(feature_mode, folds, meta)


def run_external_experiment(
    corpus: FeaturizedCorpus,
    lexicon: TypeLexicon | None,
    mode: str,
    config: ExperimentConfig,
    gaze_corpora: Sequence[FeaturizedCorpus] = (),
    embeddings: EmbeddingTable | None = None,
) -> ExperimentReport:
    """Experiments on a corpus without recorded gaze, using type-lexicon features.

    ``lexicon=None`` runs the gaze-free baseline. ``mode="cv"`` cross-validates
    on ``corpus``; ``mode="transfer"`` trains on ``gaze_corpora`` (10% held
    out for early stopping) and tests on all of ``corpus``. A lexicon that
    covers no token of the corpora gives every token the same UNKNOWN input,
    so the baseline architecture is used in that case.
    """
    if mode not in ("cv", "transfer"):
        raise ValueError("mode must be 'cv' or 'transfer'")
    start = time.perf_counter()
    pooled = list(corpus.sentences) + [s for c in gaze_corpora for s in c.sentences]
    cov = coverage(corpus.sentences, lexicon) if lexicon is not None else 0.0
    use_lex = lexicon is not None and coverage(pooled, lexicon) > 0
    name = "type_combined" if lexicon is not None else "none"
    if mode == "cv":
        bare = FeaturizedCorpus(corpus.corpus_id, list(corpus.sentences))
        if use_lex:
            rep = run_individual_experiment(bare, "type_combined", config, lexicon, embeddings)
        else:
            rep = run_individual_experiment(bare, "none", config, None, embeddings)
        rep.name = name
        rep.meta.update(protocol="external-cv", coverage=cov)
        return rep
    if not gaze_corpora:
        raise ValueError("transfer mode needs the gaze corpora to train on")
    source = [s for c in gaze_corpora for s in c.sentences]
    order = np.random.default_rng(config.seed).permutation(len(source))
    n_dev = max(1, len(source) // 10)
    dev_idx, train_idx = order[:n_dev], order[n_dev:]
    gaze_src = lexicon_bins(source, lexicon) if use_lex else None
    gaze_tgt = lexicon_bins(corpus.sentences, lexicon) if use_lex else None
    task = FoldTask(
        0,
        [Example(source[i], None if gaze_src is None else gaze_src[i]) for i in train_idx],
        [Example(source[i], None if gaze_src is None else gaze_src[i]) for i in dev_idx],
        [Example(s, None if gaze_tgt is None else gaze_tgt[i]) for i, s in enumerate(corpus.sentences)],
        _mode_config(config, use_lex),
        config.max_epochs,
        config.patience,
        config.seed,
        embeddings,
    )
    folds = [run_fold(task)]
    meta = {"protocol": "external-transfer", "coverage": cov, "seconds": time.perf_counter() - start}
    return ExperimentReport(name, folds, meta)


def format_coverage(fraction: float) -> str:
    return f"{round(100 * fraction)}%"
