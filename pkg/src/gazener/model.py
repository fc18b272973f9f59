"""Character/word/gaze-embedding BiLSTM-CRF tagger."""
from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from . import crf
from .corpus import LABELS, EmbeddingTable, Sentence, normalize_digits, repair_iob
from .gaze import DEFAULT_BINS, N_FEATURES

CHECKPOINT_VERSION = 1
UNK = "<unk>"


class DivergenceError(FloatingPointError):
    """Training produced a non-finite loss or gradient."""


@dataclass
class ModelConfig:
    char_embed_dim: int = 25
    char_lstm_hidden: int = 25
    word_embed_dim: int = 100
    word_lstm_hidden: int = 100
    gaze_bins: int = DEFAULT_BINS
    gaze_embed_dim: int | None = None  # None: equal to gaze_bins
    embed_init_scale: float = 0.1
    gaze_init_scale: float = 0.1
    use_gaze: bool = True
    dropout_rate: float = 0.5
    labels: tuple[str, ...] = LABELS
    learning_rate: float = 0.01
    gradient_clip: float = 5.0
    singleton_unk_rate: float = 0.5
    freeze_word_embeddings: bool = False
    seed: int = 0

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if self.gaze_embed_dim is None:
            self.gaze_embed_dim = self.gaze_bins
        for name in ("char_embed_dim", "char_lstm_hidden", "word_embed_dim", "word_lstm_hidden", "gaze_embed_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gaze_bins < 2:
            raise ValueError("gaze_bins must be at least 2")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def token_dim(self) -> int:
        """Width of the per-token vector fed to the word-level BiLSTM."""
        dim = 2 * self.char_lstm_hidden + self.word_embed_dim
        if self.use_gaze:
            dim += N_FEATURES * self.gaze_embed_dim
        return dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["labels"] = list(self.labels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class Vocabulary:
    words: list[str]
    chars: list[str]
    word_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.char_index = {c: i for i, c in enumerate(self.chars)}

    @classmethod
    def build(cls, sentences: Sequence[Sentence], embeddings: EmbeddingTable | None = None) -> "Vocabulary":
        counts: dict[str, int] = {}
        chars: set[str] = set()
        for s in sentences:
            for t in s.tokens:
                w = t.normalized
                counts[w] = counts.get(w, 0) + 1
                chars.update(w)
        words = [UNK] + sorted(counts)
        if embeddings is not None:
            known = set(counts)
            words += sorted(w for w in embeddings.entries if w not in known and w != UNK)
        return cls(words, [UNK] + sorted(chars), counts)

    def word_id(self, surface: str) -> int:
        w = normalize_digits(surface)
        i = self.word_index.get(w)
        if i is None:
            i = self.word_index.get(w.lower(), 0)
        return i

    def char_ids(self, surface: str) -> list[int]:
        return [self.char_index.get(c, 0) for c in normalize_digits(surface)]

    def singletons(self) -> set[int]:
        return {self.word_index[w] for w, c in self.word_counts.items() if c == 1}


@dataclass
class SentenceInput:
    """Model-ready arrays for one sentence."""

    word_ids: np.ndarray  # (n,)
    char_fw: np.ndarray  # (max_chars, n)
    char_bw: np.ndarray  # (max_chars, n), each word reversed
    char_mask: np.ndarray  # (max_chars, n)
    gaze: np.ndarray | None  # (n, 17) bin indices

    def __len__(self) -> int:
        return len(self.word_ids)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_in, fan_out))


class TaggerModel:
    def __init__(self, config: ModelConfig, vocab: Vocabulary, embeddings: EmbeddingTable | None = None):
        self.config = config
        self.vocab = vocab
        self.label_index = {lab: i for i, lab in enumerate(config.labels)}
        rng = np.random.default_rng(config.seed)
        c = config
        L = len(c.labels)
        p: dict[str, np.ndarray] = {}
        p["char_embed"] = rng.normal(0.0, c.embed_init_scale, (len(vocab.chars), c.char_embed_dim))
        for d in ("fw", "bw"):
            p[f"char_{d}.W"] = glorot(rng, c.char_embed_dim, 4 * c.char_lstm_hidden)
            p[f"char_{d}.U"] = glorot(rng, c.char_lstm_hidden, 4 * c.char_lstm_hidden)
            p[f"char_{d}.b"] = np.zeros(4 * c.char_lstm_hidden)
        word = rng.normal(0.0, c.embed_init_scale, (len(vocab.words), c.word_embed_dim))
        if embeddings is not None:
            if embeddings.dimension != c.word_embed_dim:
                raise ValueError("embedding file dimension does not match word_embed_dim")
            for w, i in vocab.word_index.items():
                vec = embeddings.entries.get(w)
                if vec is None:
                    vec = embeddings.entries.get(w.lower())
                if vec is not None:
                    word[i] = vec
        p["word_embed"] = word
        if c.use_gaze:
            for f in range(N_FEATURES):
                p[f"gaze_embed.{f}"] = rng.normal(0.0, c.gaze_init_scale, (c.gaze_bins + 1, c.gaze_embed_dim))
        for d in ("fw", "bw"):
            p[f"word_{d}.W"] = glorot(rng, c.token_dim, 4 * c.word_lstm_hidden)
            p[f"word_{d}.U"] = glorot(rng, c.word_lstm_hidden, 4 * c.word_lstm_hidden)
            p[f"word_{d}.b"] = np.zeros(4 * c.word_lstm_hidden)
        p["out.W"] = glorot(rng, 2 * c.word_lstm_hidden, L)
        p["out.b"] = np.zeros(L)
        p["crf.transitions"] = glorot(rng, L, L)
        p["crf.start"] = np.zeros(L)
        p["crf.stop"] = np.zeros(L)
        self.params = {name: ad.parameter(v, name) for name, v in p.items()}

    # -- inputs ------------------------------------------------------------------

    def prepare(self, sentence: Sentence, gaze_bins: np.ndarray | None = None) -> SentenceInput:
        words = [t.surface for t in sentence.tokens]
        word_ids = np.array([self.vocab.word_id(w) for w in words], dtype=np.int64)
        chars = [self.vocab.char_ids(w) or [0] for w in words]
        width = max(map(len, chars))
        fw = np.zeros((width, len(words)), dtype=np.int64)
        bw = np.zeros_like(fw)
        mask = np.zeros(fw.shape)
        for j, ids in enumerate(chars):
            fw[: len(ids), j] = ids
            bw[: len(ids), j] = ids[::-1]
            mask[: len(ids), j] = 1.0
        gaze = None
        if self.config.use_gaze:
            if gaze_bins is None:
                gaze = np.full((len(words), N_FEATURES), self.config.gaze_bins, dtype=np.int64)
            else:
                gaze = np.asarray(gaze_bins, dtype=np.int64).reshape(len(words), N_FEATURES)
                if gaze.min() < 0 or gaze.max() > self.config.gaze_bins:
                    raise IndexError("gaze bin index out of range")
        return SentenceInput(word_ids, fw, bw, mask, gaze)

    def gold_ids(self, labels: Sequence[str]) -> np.ndarray:
        return np.array([self.label_index[lab] for lab in labels], dtype=np.int64)

    # -- forward -------------------------------------------------------------------

    def token_representation(
        self, inp: SentenceInput, train: bool = False, rng: np.random.Generator | None = None
    ) -> ad.Node:
        """Per-token input to the word BiLSTM, before dropout; shape (n, token_dim)."""
        P = self.params
        word_ids = inp.word_ids
        if train and rng is not None and self.config.singleton_unk_rate > 0:
            singles = self._singletons
            if singles:
                hit = np.fromiter((i in singles for i in word_ids), bool, len(word_ids))
                drop = hit & (rng.random(len(word_ids)) < self.config.singleton_unk_rate)
                word_ids = np.where(drop, 0, word_ids)
        emb = ad.gather(P["char_embed"], np.stack([inp.char_fw, inp.char_bw]))
        hs = ad.lstm(emb, [self._weights("char_fw"), self._weights("char_bw")], mask=inp.char_mask)
        last = ad.select(hs, (slice(None), -1))  # (2, n, H): final state of each direction
        parts = [ad.select(last, 0), ad.select(last, 1)]
        parts.append(ad.gather(P["word_embed"], word_ids))
        if self.config.use_gaze:
            for f in range(N_FEATURES):
                parts.append(ad.gather(P[f"gaze_embed.{f}"], inp.gaze[:, f]))
        return ad.concat(parts, axis=-1)

    def encode(self, inp: SentenceInput, train: bool = False, rng: np.random.Generator | None = None) -> ad.Node:
        """Emission scores (n, |labels|)."""
        P = self.params
        x = self.token_representation(inp, train, rng)
        if train and rng is not None:
            x = ad.dropout(x, self.config.dropout_rate, rng)
        x = ad.reshape(x, (len(inp), 1, -1))
        both = ad.stack([x, ad.select(x, slice(None, None, -1))])
        hs = ad.lstm(both, [self._weights("word_fw"), self._weights("word_bw")])
        left = ad.select(hs, (0, slice(None), 0))
        right = ad.select(hs, (1, slice(None, None, -1), 0))
        ctx = ad.concat([left, right], axis=-1)
        return ad.linear(ctx, P["out.W"], P["out.b"])

    def loss(self, inp: SentenceInput, gold: Sequence[int], train: bool = False, rng=None) -> ad.Node:
        P = self.params
        em = self.encode(inp, train, rng)
        return ad.crf_nll(em, P["crf.transitions"], P["crf.start"], P["crf.stop"], gold)

    def decode(self, inp: SentenceInput) -> list[str]:
        P = self.params
        em = self.encode(inp).value
        path, _ = crf.viterbi(em, P["crf.transitions"].value, P["crf.start"].value, P["crf.stop"].value)
        labels, _ = repair_iob([self.config.labels[i] for i in path])
        return labels

    def _weights(self, prefix: str) -> tuple[ad.Node, ad.Node, ad.Node]:
        P = self.params
        return P[f"{prefix}.W"], P[f"{prefix}.U"], P[f"{prefix}.b"]

    @property
    def _singletons(self) -> set[int]:
        cached = getattr(self, "_singleton_cache", None)
        if cached is None:
            cached = self._singleton_cache = self.vocab.singletons()
        return cached

    # -- parameters ------------------------------------------------------------------

    def zero_grad(self) -> None:
        for node in self.params.values():
            node.grad = None

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.value.copy() for k, v in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, node in self.params.items():
            if state[k].shape != node.value.shape:
                raise ValueError(f"shape mismatch for {k}")
            node.value = np.array(state[k], dtype=np.float64)


def sgd_step(params: dict[str, ad.Node], learning_rate: float, clip: float = math.inf, frozen=()) -> float:
    """Clip all gradients to a global norm of ``clip`` and take one SGD step.

    Returns the pre-clipping gradient norm. Parameters without a gradient are
    left unchanged.
    """
    grads = {k: n.grad for k, n in params.items() if n.grad is not None and k not in frozen}
    sq = 0.0
    for g in grads.values():
        sq += float(np.vdot(g, g))
    norm = math.sqrt(sq)
    if not math.isfinite(norm):
        raise DivergenceError("non-finite gradient")
    scale = learning_rate
    if norm > clip:
        scale *= clip / norm
    for k, g in grads.items():
        params[k].value -= scale * g
    return norm


def train_step(model: TaggerModel, inp: SentenceInput, gold, rng: np.random.Generator) -> float:
    model.zero_grad()
    # overflow surfaces as a non-finite loss or gradient norm, reported below
    with np.errstate(over="ignore", invalid="ignore"):
        loss = model.loss(inp, gold, train=True, rng=rng)
        value = float(loss.value)
        if not math.isfinite(value):
            raise DivergenceError("non-finite loss")
        ad.backward(loss)
    frozen = ("word_embed",) if model.config.freeze_word_embeddings else ()
    sgd_step(model.params, model.config.learning_rate, model.config.gradient_clip, frozen)
    return value


# -- checkpoints -------------------------------------------------------------------


def save_checkpoint(model: TaggerModel, path: str | Path, extra: dict | None = None) -> None:
    """Write config, vocabularies, parameters and featurization metadata to one .npz file."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "words": model.vocab.words,
        "chars": model.vocab.chars,
        "word_counts": model.vocab.word_counts,
        "extra": extra or {},
    }
    arrays = {f"param/{k}": v.value for k, v in model.params.items()}
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path) -> tuple[TaggerModel, dict]:
    """Load from a path or a binary file object."""
    source = path if hasattr(path, "read") else Path(path)
    with np.load(source) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        config = ModelConfig.from_dict(meta["config"])
        vocab = Vocabulary(meta["words"], meta["chars"], meta["word_counts"])
        model = TaggerModel(config, vocab)
        model.load_state({k[len("param/") :]: data[k] for k in data.files if k.startswith("param/")})
    return model, meta["extra"]
