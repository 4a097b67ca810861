"""Command-line pipeline: ingest -> infer -> build -> series / eval.

Stages talk through files so every intermediate artifact can be inspected:

    narrative-net ingest --format srt --scenes scenes.tsv ep1.srt -o corpus.ndr
    narrative-net infer --rules 1234 corpus.ndr -o run/
    narrative-net build smooth --lambda 0.01 run/matrices.json -o run/smooth
    narrative-net series link --pair Francis,Claire run/smooth/series.json
    narrative-net eval direct corpus.ndr
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .addressee import (
    NESTED_RULESETS,
    InvalidRulesetError,
    corpus_matrices,
    coverage,
    directed_interactions,
    infer_corpus,
    parse_ruleset,
    ruleset_label,
    truth_labels,
    write_directed_csv,
)
from .corpus import CANONICAL, SRT, CorpusError, corpus_stats, parse_corpus, write_canonical
from .evaluation import (
    ALL_UTTERANCES,
    DROP_BOUNDARY,
    TABLE_METRICS,
    MissingGroundTruthError,
    compare_networks,
    direct_scores,
    rule_evaluation_table,
)
from .export import (
    fmt,
    read_matrices,
    read_series_json,
    write_gexf,
    write_hypotheses,
    write_matrices,
    write_pair_table,
    write_series_csv,
    write_series_json,
    write_value_series,
)
from .graphs import (
    DEFAULT_LAMBDA,
    SmoothingParams,
    UnknownSpeakerError,
    build_cumulative,
    build_cumulative_series,
    build_smoothed_series,
    build_time_slice_series,
    link_weight_series,
    node_strength_series,
)

EXIT_DATA = 1
EXIT_UNKNOWN_NAME = 3


def _ruleset(value: str) -> frozenset[int]:
    try:
        return parse_ruleset(value)
    except InvalidRulesetError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


def _print_table(header: Sequence[str], rows: Sequence[Sequence[str]], out=None) -> None:
    out = out or sys.stdout
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    for row in [header, *rows]:
        out.write("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _load(args, paths=None):
    return parse_corpus(paths or args.corpus, CANONICAL)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_ingest(args, parser) -> int:
    if args.format == SRT and not args.scenes:
        parser.error("--format srt requires --scenes (the scene sidecar file)")
    corpus = parse_corpus(args.inputs, args.format, scenes=args.scenes, series_id=args.series_id or "")
    write_canonical(corpus, args.output)
    stats = corpus_stats(corpus)
    _print_table(["statistic", "value"], stats.rows())
    return 0


def cmd_infer(args, parser) -> int:
    corpus = _load(args)
    hyps = infer_corpus(corpus, args.rules)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    write_hypotheses(out / "hypotheses.jsonl", hyps)
    matrices = corpus_matrices(corpus, hyps)
    write_matrices(out / "matrices.json", matrices, corpus.speakers, {"rules": ruleset_label(args.rules), "series_id": corpus.series_id})
    write_pair_table(out / "pairs.csv", matrices)
    write_directed_csv(
        out / "directed.csv", [d for s in corpus.scenes for d in directed_interactions(s, hyps[s.index])]
    )
    print(f"rules={ruleset_label(args.rules)}")
    print(f"coverage={fmt(coverage(hyps))}")
    return 0


def cmd_build(args, parser) -> int:
    matrices, speakers, _ = read_matrices(args.matrices)
    if args.method == "cumulative":
        series = build_cumulative_series(matrices, speakers)
    elif args.method == "slice":
        series = build_time_slice_series(matrices, args.window, args.stride, speakers)
    else:
        series = build_smoothed_series(matrices, SmoothingParams(args.lam), speakers)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    write_series_json(out / "series.json", series)
    write_series_csv(out / "series.csv", series)
    write_gexf(out / "series.gexf", series)
    if args.method == "cumulative":
        final = build_cumulative(matrices, speakers=speakers)
        _write_csv(out / "cumulative.csv", ["char_i", "char_j", "weight"], [[a, b, fmt(w)] for (a, b), w in sorted(final.edges.items())])
    print(f"method={series.method} snapshots={len(series)} nodes={len(series.nodes)}")
    return 0


def cmd_series(args, parser) -> int:
    series = read_series_json(args.series)
    if args.kind == "strength":
        if not args.who:
            parser.error("series strength requires --who NAME")
        rows = node_strength_series(series, args.who)
        column = "strength"
    else:
        if not args.pair or args.pair.count(",") != 1:
            parser.error("series link requires --pair A,B")
        a, b = (s.strip() for s in args.pair.split(","))
        rows = link_weight_series(series, a, b)
        column = "weight"
    if args.output:
        write_value_series(args.output, rows, column)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scene", column])
        w.writerows([t, fmt(v)] for t, v in rows)
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_eval(args, parser) -> int:
    if args.mode == "direct":
        corpus = _load(args)
        rulesets = [args.rules] if args.rules else list(NESTED_RULESETS)
        header = ["rules", "coverage", "precision", "recall", "fscore"]
        rows = []
        for rules in rulesets:
            cov, s = direct_scores(corpus, rules)
            rows.append([ruleset_label(rules), fmt(cov), fmt(s.precision), fmt(s.recall), fmt(s.fscore)])
    elif args.mode == "network":
        corpus = _load(args)
        rules = args.rules or NESTED_RULESETS[-1]
        variant = DROP_BOUNDARY if args.drop_boundary else ALL_UTTERANCES
        estimated = None
        if args.use_truth:
            estimated = {s.index: truth_labels(s) for s in corpus.scenes}
        r = compare_networks(corpus, rules, variant, estimated)
        header = ["rules", "jaccard", "cosine", "l2", "variant"]
        rows = [["truth" if args.use_truth else ruleset_label(rules), fmt(r.jaccard), fmt(r.cosine), fmt(r.l2), r.variant]]
    else:
        series = {}
        for p in args.corpus:
            c = parse_corpus(p, CANONICAL)
            series[c.series_id or Path(p).stem] = c
        rulesets = [args.rules] if args.rules else list(NESTED_RULESETS)
        table = rule_evaluation_table(series, rulesets)
        header = ["rules", "series", *TABLE_METRICS]
        rows = [[r["rules"], r["series"], *(fmt(r[k]) for k in TABLE_METRICS)] for r in table]
    _print_table(header, rows)
    if args.output:
        _write_csv(args.output, header, rows)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="narrative-net", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", help="validate annotations and write a canonical corpus")
    ing.add_argument("inputs", nargs="+", help="canonical corpus or SRT files (one episode per SRT file)")
    ing.add_argument("--format", choices=[CANONICAL, SRT], default=CANONICAL)
    ing.add_argument("--scenes", help="scene sidecar: 'episode_id<TAB>scene_start_ms' lines (SRT input)")
    ing.add_argument("--series-id")
    ing.add_argument("-o", "--output", required=True)
    ing.set_defaults(func=cmd_ingest)

    inf = sub.add_parser("infer", help="infer addressees and per-scene interaction tables")
    inf.add_argument("corpus", nargs="+")
    inf.add_argument("--rules", type=_ruleset, default=NESTED_RULESETS[-1], help="1, 12, 123 or 1234 (default)")
    inf.add_argument("-o", "--output", required=True, help="output directory")
    inf.set_defaults(func=cmd_infer)

    bld = sub.add_parser("build", help="build a dynamic network from matrices.json")
    methods = bld.add_subparsers(dest="method", required=True)
    for name, helptext in (
        ("cumulative", "prefix-cumulative series"),
        ("slice", "trailing time-slice series"),
        ("smooth", "narrative-smoothed series"),
    ):
        m = methods.add_parser(name, help=helptext)
        m.add_argument("matrices")
        m.add_argument("-o", "--output", required=True, help="output directory")
        if name == "slice":
            m.add_argument("--window", type=_positive_int, required=True, help="window size in scenes")
            m.add_argument("--stride", type=_positive_int, default=1)
        if name == "smooth":
            m.add_argument("--lambda", dest="lam", type=_positive_float, default=DEFAULT_LAMBDA)
        m.set_defaults(func=cmd_build)

    ser = sub.add_parser("series", help="strength or link-weight time series from a built series.json")
    ser.add_argument("kind", choices=["strength", "link"])
    ser.add_argument("series")
    ser.add_argument("--who")
    ser.add_argument("--pair", help="A,B")
    ser.add_argument("-o", "--output")
    ser.set_defaults(func=cmd_series)

    ev = sub.add_parser("eval", help="evaluate inferred addressees against ground truth")
    ev.add_argument("mode", choices=["direct", "network", "table"])
    ev.add_argument("corpus", nargs="+", help="canonical corpus file(s); for 'table', one file per series")
    ev.add_argument("--rules", type=_ruleset)
    ev.add_argument("--drop-boundary", action="store_true", help="discard each scene's first and last utterance")
    ev.add_argument("--use-truth", action="store_true", help="use the reference labels as the estimate (sanity check)")
    ev.add_argument("-o", "--output", help="also write the table as CSV")
    ev.set_defaults(func=cmd_eval)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except CorpusError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_DATA
    except UnknownSpeakerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_NAME
    except (MissingGroundTruthError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
