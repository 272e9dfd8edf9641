"""Command-line entry point: ``essayemo <command> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .errors import EssayEmoError, StageError


def _preprocess(args):
    from .preprocess import (
        PreprocessConfig,
        apply_morphology,
        load_contractions,
        load_stopwords,
        normalize,
        tokenize,
    )

    kw = dict(
        lowercase=not args.no_lowercase,
        expand_contractions=not args.no_contractions,
        strip_nonstandard=not args.no_nonstandard,
        strip_punctuation=not args.no_punctuation,
        remove_stopwords=not args.no_stopwords,
        collapse_whitespace=not args.no_whitespace,
        morphology=args.morphology,
    )
    if args.stopwords:
        kw["stopword_list"] = load_stopwords(args.stopwords)
    config = PreprocessConfig(**kw)
    table = load_contractions(args.contractions) if args.contractions else None
    with open(args.input, encoding="utf-8", newline="") as src, \
            open(args.output, "w", encoding="utf-8", newline="") as dst:
        reader = csv.reader(src, delimiter="\t")
        writer = csv.writer(dst, delimiter="\t", lineterminator="\n")
        header = next(reader)
        if args.text_column not in header:
            raise SystemExit(f"column {args.text_column!r} not in header")
        col = header.index(args.text_column)
        writer.writerow(header)
        for row in reader:
            if row:
                tokens = apply_morphology(tokenize(normalize(row[col], config, table)),
                                          config.morphology)
                row[col] = " ".join(tokens)
                writer.writerow(row)


def _distribution(args):
    from .corpus import ColumnMap, class_distribution, distribution_tsv, load_corpus, render_histogram

    corpora = [load_corpus(p, ColumnMap(args.id_column, args.text_column, args.label_column))
               for p in args.input]
    merged = {}
    for c in corpora:
        for label, n in class_distribution(c).items():
            merged[label] = merged.get(label, 0) + n
    merged = dict(sorted(merged.items(), key=lambda kv: (-kv[1], kv[0])))
    sys.stdout.write(distribution_tsv(merged))
    if args.histogram:
        sys.stdout.write("\n" + render_histogram(merged))


def _splits(args):
    from .corpus import ColumnMap, load_corpus, split_summary

    corpora = []
    for split in ("train", "dev", "test"):
        path = getattr(args, split)
        if path:
            label = None if split == "test" else args.label_column
            corpora.append(load_corpus(path, ColumnMap(args.id_column, args.text_column, label), split))
    for k, v in split_summary(corpora).items():
        print(f"{k}\t{v}")


def _evaluate(args):
    from .metrics import evaluate_files, render_results_table

    report = evaluate_files(args.gold, args.pred)
    sys.stdout.write(render_results_table([(Path(args.pred).stem, report)], args.format))


def _compare(args):
    from .metrics import load_leaderboard, rank_against_leaderboard

    rows = load_leaderboard(args.leaderboard)
    if args.exclude:
        rows = [r for r in rows if r["team"] != args.exclude]
    rank = rank_against_leaderboard(args.score, [(r["team"], r["macro_f1"]) for r in rows])
    print(f"rank {rank} of {len(rows) + 1} (macro F1 {args.score:.4f})")


def _run(args):
    from .experiment import ExperimentConfig, run_experiment

    bundle = run_experiment(ExperimentConfig.from_file(args.config))
    print(f"run written to {bundle.output_dir} in {bundle.duration:.1f}s")
    if bundle.report is not None:
        from .metrics import render_results_table

        sys.stdout.write(render_results_table([(bundle.name, bundle.report)]))


def _matrix(args):
    from .experiment import ExperimentConfig, ProfileFailure, run_matrix

    profiles = [p for p in args.profiles.split(",") if p.strip()] if args.profiles else None
    results, table = run_matrix(ExperimentConfig.from_file(args.config), profiles)
    sys.stdout.write(table)
    failed = [r for r in results.values() if isinstance(r, ProfileFailure)]
    for f in failed:
        print(f"[{f.stage}] {f.name}: {f.message}", file=sys.stderr)
    return 1 if failed and len(failed) == len(results) else 0


def _synth(args):
    from .experiment import write_synthetic_dataset

    path = write_synthetic_dataset(args.out, seed=args.seed)
    print(path)


def build_parser():
    parser = argparse.ArgumentParser(prog="essayemo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize the text column of a TSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--text-column", default="essay")
    for flag in ("lowercase", "contractions", "nonstandard", "punctuation", "stopwords", "whitespace"):
        p.add_argument(f"--no-{flag}", action="store_true")
    p.add_argument("--morphology", choices=("none", "stem", "lemma"), default="none")
    p.add_argument("--stopwords", help="stopword list file")
    p.add_argument("--contractions", help="contraction table TSV")
    p.set_defaults(func=_preprocess)

    for name, func, helptext in (("distribution", _distribution, "label histogram"),
                                 ("splits", _splits, "essay counts per split")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--id-column", default="essay_id")
        p.add_argument("--text-column", default="essay")
        p.add_argument("--label-column", default="emotion")
        p.set_defaults(func=func)
        if name == "distribution":
            p.add_argument("--in", dest="input", nargs="+", required=True)
            p.add_argument("--histogram", action="store_true")
        else:
            for split in ("train", "dev", "test"):
                p.add_argument(f"--{split}")

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=("text", "tsv"), default="text")
    p.set_defaults(func=_evaluate)

    p = sub.add_parser("compare", help="rank a macro F1 score against a leaderboard")
    p.add_argument("--score", type=float, required=True)
    p.add_argument("--leaderboard", required=True)
    p.add_argument("--exclude", help="team to drop before ranking")
    p.set_defaults(func=_compare)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_run)

    p = sub.add_parser("matrix", help="run several reference profiles")
    p.add_argument("--config", required=True)
    p.add_argument("--profiles", help="comma-separated profile names (default: all seven)")
    p.set_defaults(func=_matrix)

    p = sub.add_parser("synth", help="write a synthetic dataset and base config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EssayEmoError, OSError) as exc:
        print(f"error: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
