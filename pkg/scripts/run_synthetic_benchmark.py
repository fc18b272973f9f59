"""Paired 10-fold runs on the frozen synthetic benchmark.

Runs the gaze-free baseline, per-corpus token gaze and type-lexicon features
(lexicon built from a separate synthetic corpus, applied to a gaze-free copy of
the benchmark), then writes the results table, per-fold CSV, per-class table
and t-tests.

    python scripts/run_synthetic_benchmark.py --out runs/benchmark --n-jobs 8
"""
import argparse
import json
import os
import time
from pathlib import Path

from gazener.experiments import (
    FeaturizedCorpus,
    compare,
    desk_scale_config,
    format_coverage,
    lexicon_from,
    per_class_table,
    reports_csv,
    reports_table,
    run_external_experiment,
    run_individual_experiment,
)
from gazener.synthetic import (
    BENCHMARK_SEED,
    BENCHMARK_SENTENCES,
    LEXICON_SOURCE_SEED,
    LEXICON_SOURCE_SENTENCES,
    generate_synthetic_corpus,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/benchmark")
    ap.add_argument("--n-jobs", type=int, default=min(10, os.cpu_count() or 1))
    ap.add_argument("--seed", type=int, default=0, help="model and fold seed")
    ap.add_argument("--sentences", type=int, default=BENCHMARK_SENTENCES)
    ap.add_argument("--skip-lexicon", action="store_true", help="only the baseline and token-gaze runs")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = desk_scale_config(args.seed, args.n_jobs)
    syn = generate_synthetic_corpus(BENCHMARK_SEED, args.sentences)
    corpus = FeaturizedCorpus.from_events(syn.corpus_id, syn.sentences, syn.events)

    t0 = time.perf_counter()
    reports = [run_individual_experiment(corpus, mode, config) for mode in ("none", "token")]
    notes = []
    if not args.skip_lexicon:
        src = generate_synthetic_corpus(LEXICON_SOURCE_SEED, LEXICON_SOURCE_SENTENCES, corpus_id="source")
        lexicon = lexicon_from([FeaturizedCorpus.from_events("source", src.sentences, src.events)], config.model.gaze_bins)
        bare = FeaturizedCorpus(syn.corpus_id, syn.sentences)
        typed = run_external_experiment(bare, lexicon, "cv", config)
        reports.append(typed)
        notes.append(f"type_combined lexicon coverage {format_coverage(typed.meta['coverage'])}")
    for r in reports[1:]:
        sig = compare(reports[0], r)
        notes.append(f"{r.name} vs none: t={sig.t:.3f} df={sig.df} p={sig.p_value:.3g}")

    title = f"synthetic benchmark, {len(corpus)} sentences, {config.k_folds}-fold CV"
    summary = reports_table(reports, title) + "\n" + "\n".join(notes) + "\n"
    (out / "report.txt").write_text(summary, encoding="utf-8")
    (out / "report.csv").write_text(reports_csv(reports), encoding="utf-8")
    (out / "per_class.txt").write_text(per_class_table(reports), encoding="utf-8")
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(summary + f"\n{time.perf_counter() - t0:.0f} s, reports in {out}")


if __name__ == "__main__":
    main()
