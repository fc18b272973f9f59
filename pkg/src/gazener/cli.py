"""Command-line entry point: ``gazener <subcommand> ...``.

Every subcommand writes its outputs plus ``<subcommand>.manifest.json`` into
an output directory. Exit status is 0 on success, 1 for invalid input or
configuration, 2 for runtime or numeric failures.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import FormatError, parse_embedding_text, parse_fixation_text, parse_token_text, format_sentences
from .experiments import (
    CROSS_MODES,
    FEATURE_MODES,
    Example,
    ExperimentConfig,
    FeaturizedCorpus,
    compare,
    desk_scale_config,
    format_coverage,
    format_featurized,
    lexicon_from,
    parse_featurized,
    per_class_table,
    predict,
    reports_csv,
    reports_table,
    run_cross_experiment,
    run_external_experiment,
    run_individual_experiment,
    train_with_early_stopping,
)
from .gaze import DEFAULT_BINS
from .lexicon import coverage, format_lexicon, lexicon_bins, parse_lexicon
from .metrics import evaluate
from .model import DivergenceError, ModelConfig, TaggerModel, Vocabulary, load_checkpoint, save_checkpoint
from .synthetic import generate_synthetic_corpus

log = logging.getLogger("gazener")

OUTPUT_ENV = "GAZENER_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    pass


# -- run manifest -----------------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    config: dict = field(default_factory=dict)
    seed: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    tool: str = "gazener"
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


class Run:
    """Tracks the bytes read and files written by one subcommand."""

    def __init__(self, command: str, out_dir: Path):
        self.manifest = RunManifest(command)
        self.out_dir = out_dir
        self.started = time.perf_counter()

    def read_bytes(self, path: str | Path) -> bytes:
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise FormatError(f"cannot read input: {exc.strerror}", path) from None
        self.manifest.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return data

    def read(self, path: str | Path) -> str:
        data = self.read_bytes(path)
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"not valid UTF-8: {exc}", path) from None

    def write(self, name: str, content: str | bytes) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        if isinstance(content, str):
            content = content.encode("utf-8")
        path.write_bytes(content)
        self.manifest.outputs.append(name)
        return path

    def finish(self) -> Path:
        self.manifest.wall_clock_seconds = round(time.perf_counter() - self.started, 3)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"{self.manifest.command}.manifest.json"
        path.write_text(self.manifest.to_json(), encoding="utf-8")
        return path


# -- configuration -------------------------------------------------------------------------

_MODEL_KEYS = {f.name: f.type for f in fields(ModelConfig) if f.name not in ("labels", "seed", "use_gaze")}
_EXPERIMENT_KEYS = {"k_folds": int, "cross_folds": int, "max_epochs": int, "patience": int, "seed": int, "n_jobs": int}
_DATA_KEYS = (
    "profile",
    "corpus",
    "train",
    "dev",
    "target",
    "lexicon",
    "embeddings",
    "output_dir",
    "feature_mode",
    "feature_modes",
    "protocol",
)


def _convert(key: str, value: str, kind) -> object:
    kind = str(kind)
    try:
        if "bool" in kind:
            low = value.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError
            return low in ("1", "true", "yes", "on")
        if "int" in kind:
            if "None" in kind and value.strip().lower() in ("", "none"):
                return None
            return int(value)
        if "float" in kind:
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return value


def load_config_file(text: str, path: str | Path | None = None) -> dict[str, str]:
    """Key/value pairs of the ``[experiment]`` section. Unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigError("config file needs an [experiment] section")
    values = dict(parser.items("experiment"))
    unknown = sorted(set(values) - set(_MODEL_KEYS) - set(_EXPERIMENT_KEYS) - set(_DATA_KEYS))
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    return values


def build_experiment_config(values: dict[str, str]) -> ExperimentConfig:
    profile = values.get("profile", "paper")
    if profile not in ("paper", "desk"):
        raise ConfigError(f"profile: expected 'paper' or 'desk', got {profile!r}")
    seed = _convert("seed", values["seed"], int) if "seed" in values else 0
    base = desk_scale_config(seed) if profile == "desk" else ExperimentConfig(seed=seed)
    model_kw = {k: _convert(k, v, _MODEL_KEYS[k]) for k, v in values.items() if k in _MODEL_KEYS}
    exp_kw = {k: _convert(k, v, _EXPERIMENT_KEYS[k]) for k, v in values.items() if k in _EXPERIMENT_KEYS}
    model_kw["seed"] = exp_kw.get("seed", base.seed)
    if "gaze_bins" in model_kw and "gaze_embed_dim" not in model_kw:
        model_kw["gaze_embed_dim"] = None
    try:
        model = replace(base.model, **model_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    config = replace(base, model=model, **exp_kw)
    problems = []
    if config.k_folds < 3:
        problems.append("k_folds must be at least 3")
    if config.cross_folds < 2:
        problems.append("cross_folds must be at least 2")
    if config.max_epochs < 1:
        problems.append("max_epochs must be positive")
    if config.patience < 1:
        problems.append("patience must be positive")
    if config.n_jobs < 1:
        problems.append("n_jobs must be positive")
    if not 0.0 <= model.dropout_rate < 1.0:
        problems.append("dropout_rate must lie in [0, 1)")
    if not model.learning_rate > 0:
        problems.append("learning_rate must be positive")
    if not model.gradient_clip > 0:
        problems.append("gradient_clip must be positive")
    if problems:
        raise ConfigError("; ".join(problems))
    return config


def _settings(args, run: Run | None = None) -> dict[str, str]:
    """Config file values overridden by any flags that were given."""
    values: dict[str, str] = {}
    if getattr(args, "config", None):
        text = run.read(args.config) if run else Path(args.config).read_text(encoding="utf-8")
        values.update(load_config_file(text, args.config))
    for key in list(_MODEL_KEYS) + list(_EXPERIMENT_KEYS) + list(_DATA_KEYS):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    return values


def output_dir(args, values: dict[str, str] | None = None) -> Path:
    """--out, then $GAZENER_OUTPUT_DIR, then the config's output_dir, then the working directory."""
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    if values and values.get("output_dir"):
        return Path(values["output_dir"])
    return Path(".")


def _require(values: dict[str, str], key: str) -> str:
    if not values.get(key):
        raise ConfigError(f"{key}: required (set it in the config file or pass --{key.replace('_', '-')})")
    return values[key]


def _is_featurized(text: str) -> bool:
    for line in text.split("\n"):
        if not line.startswith("#"):
            return False
        if line[1:].partition("=")[0].strip() == "bins":
            return True
    return False


def load_corpus(run: Run, path: str | Path, require_labels: bool = True) -> FeaturizedCorpus:
    """A featurized corpus file, or a plain token file (no gaze)."""
    text = run.read(path)
    if _is_featurized(text):
        return parse_featurized(text, path)
    tf = parse_token_text(text, path=path, require_labels=require_labels)
    if tf.repairs:
        log.warning("%s: repaired %d stray I- labels", path, tf.repairs)
    return FeaturizedCorpus(tf.corpus_id, tf.sentences)


def _load_lexicon(run: Run, path: str | None):
    return None if not path else parse_lexicon(run.read(path), path)


def _load_embeddings(run: Run, path: str | None, dimension: int):
    if not path:
        return None
    table = parse_embedding_text(run.read(path), dimension, path)
    if table.skipped:
        log.warning("%s: skipped %d malformed embedding rows", path, table.skipped)
    return table


def _modes(values: dict[str, str], allowed, default: str) -> list[str]:
    raw = values.get("feature_modes") or values.get("feature_mode") or default
    modes = [m.strip() for m in raw.split(",") if m.strip()]
    bad = [m for m in modes if m not in allowed]
    if bad or not modes:
        raise ConfigError(f"feature_modes: {', '.join(bad) or raw!r} not in {', '.join(allowed)}")
    return modes


def _write_reports(run: Run, reports, title: str) -> str:
    table = reports_table(reports, title)
    baseline = next((r for r in reports if r.name == "none"), None)
    lines = []
    if baseline is not None and len(baseline.folds) >= 2:
        for r in reports:
            if r is baseline:
                continue
            sig = compare(baseline, r)
            verdict = "significant" if sig.significant else "not significant"
            lines.append(f"{r.name} vs none: t={sig.t:.4f} df={sig.df} p={sig.p_value:.6g} ({verdict} at 0.05)")
    for r in reports:
        if "coverage" in r.meta and r.name != "none":
            lines.append(f"{r.name}: lexicon coverage {format_coverage(r.meta['coverage'])}")
    summary = table + ("\n" + "\n".join(lines) + "\n" if lines else "")
    run.write("report.txt", summary)
    run.write("report.csv", reports_csv(reports))
    run.write("per_class.txt", per_class_table(reports))
    return summary


# -- subcommands ----------------------------------------------------------------------------


def cmd_featurize(args) -> int:
    run = Run("featurize", output_dir(args))
    run.manifest.config = {"bins": args.bins, "reader_count": args.reader_count}
    text = run.read(args.tokens)
    tf = parse_token_text(text, path=args.tokens)
    if args.fixations:
        events = parse_fixation_text(run.read(args.fixations), tf.sentences, args.fixations)
        corpus = FeaturizedCorpus.from_events(tf.corpus_id, tf.sentences, events, args.bins, args.reader_count)
        thresholds = corpus.thresholds
    elif args.type_lexicon:
        lexicon = parse_lexicon(run.read(args.type_lexicon), args.type_lexicon)
        corpus = FeaturizedCorpus.from_lexicon(tf.corpus_id, tf.sentences, lexicon)
        thresholds = lexicon.thresholds
        log.info("lexicon coverage %s", format_coverage(coverage(tf.sentences, lexicon)))
    else:
        raise ConfigError("featurize needs a fixation file or --type-lexicon")
    run.write(f"{corpus.corpus_id}.feat.tsv", format_featurized(corpus))
    run.write(f"{corpus.corpus_id}.thresholds.json", json.dumps(thresholds.to_dict(), indent=1, sort_keys=True) + "\n")
    run.finish()
    return EXIT_OK


def cmd_build_lexicon(args) -> int:
    run = Run("build-lexicon", output_dir(args))
    if not args.corpora:
        raise ConfigError("build-lexicon needs at least one featurized corpus")
    corpora = []
    for path in args.corpora:
        text = run.read(path)
        if not _is_featurized(text):
            raise ConfigError(f"{path}: not a featurized corpus")
        c = parse_featurized(text, path)
        if c.source != "fixations":
            raise ConfigError(f"{path}: features came from a lexicon, not from recorded gaze")
        corpora.append(c)
    ids = [c.corpus_id for c in corpora]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate corpus ids: {', '.join(ids)}")
    n_bins = {c.n_bins for c in corpora}
    bins = args.bins or (n_bins.pop() if len(n_bins) == 1 else None)
    if bins is None:
        raise ConfigError("corpora were binned with different B; pass --bins")
    run.manifest.config = {"bins": bins, "corpora": ids}
    run.write(args.name, format_lexicon(lexicon_from(corpora, bins)))
    run.finish()
    return EXIT_OK


def _gaze_for(corpus: FeaturizedCorpus, mode: str, lexicon, what: str):
    if mode == "none":
        return None
    if mode == "type":
        if lexicon is None:
            raise ConfigError("lexicon: required for feature_mode type")
        return lexicon_bins(corpus.sentences, lexicon)
    if not corpus.has_gaze:
        raise ConfigError(f"{what}: feature_mode token needs a featurized corpus")
    return corpus.bins


def cmd_train(args) -> int:
    values = _settings(args)
    run = Run("train", output_dir(args, values))
    values = _settings(args, run)
    config = build_experiment_config(values)
    mode = _modes(values, ("none", "token", "type"), "token")
    if len(mode) != 1:
        raise ConfigError("feature_mode: train takes a single mode")
    mode = mode[0]
    train = load_corpus(run, _require(values, "train"))
    lexicon = _load_lexicon(run, values.get("lexicon"))
    embeddings = _load_embeddings(run, values.get("embeddings"), config.model.word_embed_dim)
    model_config = replace(config.model, use_gaze=mode != "none")
    if mode == "token" and train.n_bins != model_config.gaze_bins:
        raise ConfigError(f"gaze_bins: model uses {model_config.gaze_bins} bins but the corpus has {train.n_bins}")
    if mode == "type" and lexicon is not None and lexicon.thresholds.bins != model_config.gaze_bins:
        raise ConfigError(f"gaze_bins: model uses {model_config.gaze_bins} bins but the lexicon has {lexicon.thresholds.bins}")
    gaze = _gaze_for(train, mode, lexicon, "train")
    examples = [Example(s, None if gaze is None else gaze[i]) for i, s in enumerate(train.sentences)]
    if values.get("dev"):
        dev_corpus = load_corpus(run, values["dev"])
        dgaze = _gaze_for(dev_corpus, mode, lexicon, "dev")
        dev = [Example(s, None if dgaze is None else dgaze[i]) for i, s in enumerate(dev_corpus.sentences)]
    else:
        order = np.random.default_rng(config.seed).permutation(len(examples))
        n_dev = max(1, len(examples) // 10)
        dev = [examples[i] for i in sorted(order[:n_dev])]
        examples = [examples[i] for i in sorted(order[n_dev:])]
    run.manifest.seed = config.seed
    run.manifest.config = {"feature_mode": mode, **config.to_dict()}
    vocab = Vocabulary.build([ex.sentence for ex in examples], embeddings)
    model = TaggerModel(model_config, vocab, embeddings)
    result = train_with_early_stopping(model, examples, dev, config.max_epochs, config.patience, config.seed)
    extra = {"feature_mode": mode, "best_epoch": result.best_epoch, "best_dev_f": result.best_dev_f}
    if lexicon is not None:
        # lets `tag` featurize raw text without a separate lexicon file
        extra["lexicon"] = format_lexicon(lexicon)
    ckpt = run.out_dir / "model.npz"
    run.out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, ckpt, extra)
    run.manifest.outputs.append(ckpt.name)
    history = [{"epoch": e, "train_loss": loss, "dev_f": f} for e, loss, f in result.history]
    run.write("training.json", json.dumps({"best_epoch": result.best_epoch, "history": history}, indent=1) + "\n")
    run.finish()
    log.info("best dev F %.4f at epoch %d", result.best_dev_f, result.best_epoch)
    return EXIT_OK


def cmd_tag(args) -> int:
    run = Run("tag", output_dir(args))
    model, extra = load_checkpoint(io.BytesIO(run.read_bytes(args.checkpoint)))
    mode = extra.get("feature_mode", "token" if model.config.use_gaze else "none")
    corpus = load_corpus(run, args.input, require_labels=False)
    lexicon = _load_lexicon(run, args.lexicon)
    if lexicon is None and extra.get("lexicon"):
        lexicon = parse_lexicon(extra["lexicon"])
    gaze, source = None, "none"
    if model.config.use_gaze:
        if mode == "token" and corpus.has_gaze:
            gaze, source = corpus.bins, "corpus"
        elif lexicon is not None:
            gaze, source = lexicon_bins(corpus.sentences, lexicon), "lexicon"
            log.info("tagging with lexicon features, coverage %s", format_coverage(coverage(corpus.sentences, lexicon)))
        else:
            log.warning("no gaze input available; every token gets the UNKNOWN bins")
    run.manifest.config = {"feature_mode": mode, "gaze_source": source}
    examples = [Example(s, None if gaze is None else gaze[i]) for i, s in enumerate(corpus.sentences)]
    tagged = [s.with_labels(labels) for s, labels in zip(corpus.sentences, predict(model, examples))]
    run.write(f"{Path(args.input).name.split('.')[0]}.tagged.tsv", format_sentences(tagged, corpus.corpus_id))
    run.finish()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.gold or args.pred:
        if not (args.gold and args.pred):
            raise ConfigError("--gold and --pred go together")
        run = Run("evaluate", output_dir(args))
        gold = parse_token_text(run.read(args.gold), path=args.gold).sentences
        pred = parse_token_text(run.read(args.pred), path=args.pred).sentences
        if [s.words for s in gold] != [s.words for s in pred]:
            raise FormatError("gold and predicted files do not contain the same tokens", args.pred)
        report = evaluate([s.labels for s in gold], [s.labels for s in pred])
        lines = [f"{'class':<12}  {'P':>6}  {'R':>6}  {'F':>6}"]
        for c, (p, r, f) in report.per_class().items():
            lines.append(f"{c:<12}  {100 * p:6.2f}  {100 * r:6.2f}  {100 * f:6.2f}")
        lines.append(f"{'micro':<12}  {100 * report.precision:6.2f}  {100 * report.recall:6.2f}  {100 * report.f1:6.2f}")
        text = "\n".join(lines) + "\n"
        run.write("report.txt", text)
        run.finish()
        print(text, end="")
        return EXIT_OK
    values = _settings(args)
    run = Run("evaluate", output_dir(args, values))
    values = _settings(args, run)
    config = build_experiment_config(values)
    modes = _modes(values, FEATURE_MODES, "none,token")
    corpus = load_corpus(run, _require(values, "corpus"))
    lexicon = _load_lexicon(run, values.get("lexicon"))
    embeddings = _load_embeddings(run, values.get("embeddings"), config.model.word_embed_dim)
    run.manifest.seed = config.seed
    run.manifest.config = {"feature_modes": modes, **config.to_dict()}
    reports = []
    for mode in modes:
        if mode == "type_combined" and lexicon is None:
            raise ConfigError("lexicon: required for feature mode type_combined")
        if mode in ("token", "type_individual") and (not corpus.has_gaze or corpus.source != "fixations"):
            raise ConfigError(f"corpus: feature mode {mode} needs a corpus featurized from fixations")
        if mode == "type_combined" and not corpus.has_gaze:
            rep = run_external_experiment(corpus, lexicon, "cv", config, embeddings=embeddings)
            rep.name = mode
        else:
            rep = run_individual_experiment(corpus, mode, config, lexicon, embeddings)
        reports.append(rep)
        log.info("%s: mean F %.4f", mode, rep.f1)
    print(_write_reports(run, reports, f"{corpus.corpus_id}: {config.k_folds}-fold cross-validation"), end="")
    run.finish()
    return EXIT_OK


def cmd_cross_eval(args) -> int:
    values = _settings(args)
    run = Run("cross-eval", output_dir(args, values))
    values = _settings(args, run)
    config = build_experiment_config(values)
    protocol = values.get("protocol", "cross")
    if protocol not in ("cross", "transfer"):
        raise ConfigError(f"protocol: expected 'cross' or 'transfer', got {protocol!r}")
    modes = _modes(values, CROSS_MODES, "none,type")
    train_paths = [p.strip() for p in _require(values, "train").split(",") if p.strip()]
    sources = [load_corpus(run, p) for p in train_paths]
    target = load_corpus(run, _require(values, "target"))
    lexicon = _load_lexicon(run, values.get("lexicon"))
    embeddings = _load_embeddings(run, values.get("embeddings"), config.model.word_embed_dim)
    run.manifest.seed = config.seed
    run.manifest.config = {"protocol": protocol, "feature_modes": modes, **config.to_dict()}
    reports = []
    for mode in modes:
        if protocol == "transfer":
            if mode == "token":
                raise ConfigError("feature_modes: token is not available when the target has no recorded gaze")
            lex = lexicon if mode == "type" else None
            if mode == "type" and lex is None:
                raise ConfigError("lexicon: required for feature mode type")
            rep = run_external_experiment(target, lex, "transfer", config, sources, embeddings)
        else:
            if len(sources) != 1:
                raise ConfigError("train: the cross protocol takes exactly one training corpus")
            rep = run_cross_experiment(sources[0], target, mode, config, lexicon, embeddings)
        rep.name = mode
        reports.append(rep)
    title = f"{'+'.join(c.corpus_id for c in sources)} -> {target.corpus_id} ({protocol})"
    print(_write_reports(run, reports, title), end="")
    run.finish()
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    run = Run("gen-synthetic", output_dir(args))
    if args.sentences < 1:
        raise ConfigError("--sentences must be positive")
    corpus = generate_synthetic_corpus(args.seed, args.sentences, corpus_id=args.corpus_id, with_gaze=not args.no_gaze)
    run.manifest.seed = args.seed
    run.manifest.config = {"sentences": args.sentences, "corpus_id": args.corpus_id, "with_gaze": not args.no_gaze}
    run.write(f"{args.corpus_id}.tsv", corpus.token_text())
    if not args.no_gaze:
        run.write(f"{args.corpus_id}.fix.csv", corpus.fixation_text())
    run.finish()
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file with an [experiment] section")
    p.add_argument("--profile", choices=("paper", "desk"), help="default hyperparameters (desk: small layers, 15 epochs)")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--n-jobs", dest="n_jobs", type=int, help="folds trained in parallel")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--bins", dest="gaze_bins", type=int, help="gaze bins B the model expects")
    p.add_argument("--lexicon")
    p.add_argument("--embeddings", help="pretrained vectors, one 'word v1 ... vd' per line")
    p.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV}, then config output_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gazener", description="Gaze-feature NER pipeline.")
    parser.add_argument("--version", action="version", version=f"gazener {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("featurize", help="fixation events -> binned gaze features")
    p.add_argument("tokens")
    p.add_argument("fixations", nargs="?")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--reader-count", type=int, help="readers per sentence (default: readers seen in the file)")
    p.add_argument("--type-lexicon", help="look features up here when there is no fixation file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("build-lexicon", help="featurized corpora -> type lexicon")
    p.add_argument("corpora", nargs="*")
    p.add_argument("--bins", type=int)
    p.add_argument("--name", default="lexicon.tsv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_lexicon)

    p = sub.add_parser("train", help="train one tagger with early stopping")
    _experiment_flags(p)
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--feature-mode", dest="feature_mode", choices=("none", "token", "type"))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="label a token file with a trained model")
    p.add_argument("checkpoint")
    p.add_argument("input")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("evaluate", help="score predictions, or run cross-validation experiments")
    _experiment_flags(p)
    p.add_argument("--gold")
    p.add_argument("--pred")
    p.add_argument("--corpus")
    p.add_argument("--feature-modes", dest="feature_modes", help=f"comma list of {', '.join(FEATURE_MODES)}")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cross-eval", help="train on one corpus, test on another")
    _experiment_flags(p)
    p.add_argument("--train", help="training corpus (comma list for --protocol transfer)")
    p.add_argument("--target")
    p.add_argument("--protocol", choices=("cross", "transfer"))
    p.add_argument("--feature-modes", dest="feature_modes", help=f"comma list of {', '.join(CROSS_MODES)}")
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("gen-synthetic", help="write a synthetic corpus and its fixation file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sentences", type=int, default=500)
    p.add_argument("--corpus-id", default="synthetic")
    p.add_argument("--no-gaze", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DivergenceError, FloatingPointError, ArithmeticError, RuntimeError, MemoryError) as exc:
        print(f"gazener {args.command}: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, KeyError, IndexError, OSError) as exc:
        print(f"gazener {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
