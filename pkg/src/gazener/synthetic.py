"""Template-based NER corpora with simulated reader fixations.

Entity names and capitalised "distractor" words are drawn from pseudo-word
pools that depend only on ``pool_seed``, so corpora generated with different
seeds share a vocabulary (and a type lexicon built from one covers the other).
Some template slots accept either an entity or a distractor; in those slots
only the reading behaviour tells them apart, because readers dwell about 40%
longer on entity tokens and fixate them more often.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import FixationEvent, Sentence, Token, format_fixations, format_sentences

_ONSETS = ["b", "br", "d", "dr", "f", "g", "gr", "h", "k", "kl", "l", "m", "n", "p", "pr", "r", "s", "st", "t", "tr", "v", "z"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ea", "ou"]
_CODAS = ["", "", "n", "r", "l", "s", "th", "nd", "m", "x"]

ORG_SUFFIXES = ["Corp", "Group", "Bank", "Institute", "Records", "Motors", "Systems", "Union"]
LOC_PREFIXES = ["Port", "Lake", "Mount", "North", "East", "San", "New"]

COMMON_WORDS = [
    "report", "meeting", "village", "market", "letter", "river", "contract", "station", "winter", "garden",
    "council", "evening", "journey", "museum", "harvest", "bridge", "season", "project", "festival", "station",
]
VERBS = ["visited", "praised", "joined", "left", "described", "mentioned", "criticised", "supported", "watched", "called"]
ADJS = ["old", "quiet", "famous", "local", "small", "busy", "remote", "large"]

# {PER} {ORG} {LOC}: an entity of that class, or (with probability
# distractor_rate) a capitalised non-entity word in the same position.
TEMPLATES = [
    "{PER} {V} {LOC} in {N} {D} .",
    "{PER} {V} {ORG} after the {N} .",
    "The {A} {N} near {LOC} was {V} by {PER} .",
    "{ORG} {V} {PER} at the {N} .",
    "Yesterday {PER} {V} the {A} {N} .",
    "They talked about {ORG} during the {N} .",
    "In {LOC} , {PER} {V} the {N} .",
    "{PER} 's {N} was {V} by {ORG} .",
    "A {A} {N} from {ORG} {V} {LOC} .",
    "Nobody {V} {PER} or {LOC} at the {N} .",
    "The {N} {V} {LOC} on {D} .",
]
DAYS = ["Monday", "Tuesday", "Friday", "Sunday"]


# the frozen end-to-end benchmark: target corpus and the gaze corpus whose
# type lexicon is used when the target is tagged without recorded gaze
BENCHMARK_SEED = 7
BENCHMARK_SENTENCES = 500
LEXICON_SOURCE_SEED = 11
LEXICON_SOURCE_SENTENCES = 4000


@dataclass
class SyntheticSpec:
    pool_seed: int = 1234
    # pool sizes are proportional to how often each pool is drawn from, so a
    # name and a distractor are equally likely to have been seen before
    n_first_names: int = 500
    n_last_names: int = 125
    n_org_names: int = 310
    n_loc_names: int = 375
    n_distractors: int = 975
    distractor_rate: float = 0.45
    multiword_rate: float = 0.25
    n_readers: int = 8
    entity_duration_shift: float = 0.4
    entity_fixation_boost: float = 0.25
    duration_sigma: float = 0.35
    regression_rate: float = 0.12


@dataclass
class SyntheticCorpus:
    corpus_id: str
    sentences: list[Sentence]
    events: list[FixationEvent] = field(default_factory=list)
    readers: tuple[str, ...] = ()

    def token_text(self) -> str:
        return format_sentences(self.sentences, self.corpus_id)

    def fixation_text(self) -> str:
        return format_fixations(self.events)

    def write(self, directory: str | Path, with_gaze: bool = True) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {"tokens": directory / f"{self.corpus_id}.tsv"}
        paths["tokens"].write_text(self.token_text(), encoding="utf-8")
        if with_gaze:
            paths["fixations"] = directory / f"{self.corpus_id}.fix.csv"
            paths["fixations"].write_text(self.fixation_text(), encoding="utf-8")
        return paths


def _pseudo_words(rng: np.random.Generator, n: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        syl = int(rng.integers(2, 4))
        w = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))] + _CODAS[rng.integers(len(_CODAS))]
            for _ in range(syl)
        ).capitalize()
        if w not in taken and len(w) <= 12:
            taken.add(w)
            out.append(w)
    return out


@dataclass
class _Pools:
    first: list[str]
    last: list[str]
    org: list[str]
    loc: list[str]
    distractors: list[str]


def make_pools(spec: SyntheticSpec) -> _Pools:
    rng = np.random.default_rng(spec.pool_seed)
    taken: set[str] = set()
    return _Pools(
        first=_pseudo_words(rng, spec.n_first_names, taken),
        last=_pseudo_words(rng, spec.n_last_names, taken),
        org=_pseudo_words(rng, spec.n_org_names, taken),
        loc=_pseudo_words(rng, spec.n_loc_names, taken),
        distractors=_pseudo_words(rng, spec.n_distractors, taken),
    )


def _choice(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _entity(rng, pools: _Pools, cls: str, spec: SyntheticSpec) -> list[tuple[str, str]]:
    if cls == "PERSON":
        words = [_choice(rng, pools.first)]
        if rng.random() < spec.multiword_rate:
            words.append(_choice(rng, pools.last))
    elif cls == "ORGANIZATION":
        words = [_choice(rng, pools.org)]
        if rng.random() < spec.multiword_rate:
            words.append(_choice(rng, ORG_SUFFIXES))
    else:
        words = [_choice(rng, pools.loc)]
        if rng.random() < spec.multiword_rate:
            words.insert(0, _choice(rng, LOC_PREFIXES))
    return [(w, ("B-" if i == 0 else "I-") + cls) for i, w in enumerate(words)]


_SLOTS = {"{PER}": "PERSON", "{ORG}": "ORGANIZATION", "{LOC}": "LOCATION"}


def _fill(rng, pools: _Pools, spec: SyntheticSpec, template: str) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    for slot in template.split():
        cls = _SLOTS.get(slot)
        if cls is not None:
            if rng.random() < spec.distractor_rate:
                out.append((_choice(rng, pools.distractors), "O"))
            else:
                out += _entity(rng, pools, cls, spec)
        elif slot == "{V}":
            out.append((_choice(rng, VERBS), "O"))
        elif slot == "{N}":
            out.append((_choice(rng, COMMON_WORDS), "O"))
        elif slot == "{A}":
            out.append((_choice(rng, ADJS), "O"))
        elif slot == "{D}":
            out.append((_choice(rng, DAYS + ["0" + str(int(rng.integers(1, 10))) + "/2019"]), "O"))
        else:
            out.append((slot, "O"))
    return out


def _to_sentence(corpus_id: str, sent_id: int, words: list[tuple[str, str]]) -> Sentence:
    tokens = []
    group = -1
    for w, lab in words:
        # clitics attach to the preceding whitespace unit
        if not (w == "'s" and tokens):
            group += 1
        tokens.append(Token(w, lab, group))
    return Sentence(corpus_id, sent_id, tuple(tokens))


def _simulate_reader(
    rng: np.random.Generator, spec: SyntheticSpec, sentence: Sentence, reader_id: str, reader_speed: float
) -> list[FixationEvent]:
    """Left-to-right scanpath with skips, refixations and occasional regressions."""
    n = sentence.n_groups
    texts = [""] * n
    entity = [False] * n
    for t in sentence.tokens:
        texts[t.whitespace_group] += t.surface
        entity[t.whitespace_group] |= t.label != "O"
    fixations: list[tuple[int, float]] = []

    def dwell(w: int, factor: float = 1.0) -> float:
        base = (150.0 + 9.0 * len(texts[w])) * factor
        if entity[w]:
            base *= 1.0 + spec.entity_duration_shift
        return float(max(40.0, round(base * reader_speed * rng.lognormal(0.0, spec.duration_sigma))))

    for w in range(n):
        length = len(texts[w])
        p_fix = min(0.97, 0.45 + 0.06 * length + (spec.entity_fixation_boost if entity[w] else 0.0))
        if rng.random() >= p_fix:
            continue
        fixations.append((w, dwell(w)))
        p_refix = 0.1 + (0.25 if entity[w] else 0.0)
        if rng.random() < p_refix:
            fixations.append((w, dwell(w, 0.6)))
        if w > 0 and rng.random() < spec.regression_rate:
            back = int(rng.integers(max(0, w - 3), w))
            fixations.append((back, dwell(back, 0.7)))
    return [FixationEvent(reader_id, sentence.sent_id, w, k, d) for k, (w, d) in enumerate(fixations)]


def generate_synthetic_corpus(
    seed: int, n_sentences: int, spec: SyntheticSpec | None = None, corpus_id: str = "synthetic", with_gaze: bool = True
) -> SyntheticCorpus:
    spec = spec or SyntheticSpec()
    pools = make_pools(spec)
    rng = np.random.default_rng(seed)
    sentences = []
    for sid in range(n_sentences):
        template = _choice(rng, TEMPLATES)
        sentences.append(_to_sentence(corpus_id, sid, _fill(rng, pools, spec, template)))
    readers = tuple(f"r{i:02d}" for i in range(spec.n_readers)) if with_gaze else ()
    events: list[FixationEvent] = []
    if with_gaze:
        gaze_rng = np.random.default_rng([seed, 1])
        speeds = gaze_rng.lognormal(0.0, 0.15, len(readers))
        for sent in sentences:
            for r, speed in zip(readers, speeds):
                events += _simulate_reader(gaze_rng, spec, sent, r, speed)
    return SyntheticCorpus(corpus_id, sentences, events, readers)
