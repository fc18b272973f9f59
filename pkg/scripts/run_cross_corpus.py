"""Cross-corpus and transfer protocols on three synthetic gaze corpora.

Each pair (A, B) trains on all of A and alternates a 20% dev slice of B; the
transfer run trains on every gaze corpus and tests on a gaze-free one through
the combined type lexicon.

    python scripts/run_cross_corpus.py --out runs/cross --sentences 200
"""
import argparse
import itertools
import os
from pathlib import Path

from gazener.experiments import (
    FeaturizedCorpus,
    desk_scale_config,
    lexicon_from,
    reports_csv,
    reports_table,
    run_cross_experiment,
    run_external_experiment,
)
from gazener.synthetic import generate_synthetic_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/cross")
    ap.add_argument("--sentences", type=int, default=200)
    ap.add_argument("--n-jobs", type=int, default=min(5, os.cpu_count() or 1))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = desk_scale_config(args.seed, args.n_jobs)

    corpora = []
    for name, seed in (("alpha", 21), ("beta", 22), ("gamma", 23)):
        syn = generate_synthetic_corpus(seed, args.sentences, corpus_id=name)
        corpora.append(FeaturizedCorpus.from_events(name, syn.sentences, syn.events))
    lexicon = lexicon_from(corpora, config.model.gaze_bins)

    blocks, rows = [], []
    for a, b in itertools.permutations(corpora, 2):
        reps = [run_cross_experiment(a, b, mode, config, lexicon) for mode in ("none", "token", "type")]
        blocks.append(reports_table(reps, f"{a.corpus_id} -> {b.corpus_id}"))
        rows.append(reports_csv(reps))

    held_out = generate_synthetic_corpus(24, args.sentences, corpus_id="delta", with_gaze=False)
    bare = FeaturizedCorpus("delta", held_out.sentences)
    reps = [run_external_experiment(bare, lex, "transfer", config, corpora) for lex in (None, lexicon)]
    blocks.append(reports_table(reps, "all gaze corpora -> delta (transfer)"))
    rows.append(reports_csv(reps))

    text = "\n".join(blocks)
    (out / "report.txt").write_text(text, encoding="utf-8")
    (out / "report.csv").write_text("".join(rows), encoding="utf-8")
    print(text)


if __name__ == "__main__":
    main()
