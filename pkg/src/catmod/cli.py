"""``catmod`` command-line interface.

Exit status: 0 on success, 1 on user or data errors, 2 on internal
errors. Every failure writes one line ``error:<stage>: <message>`` to
standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .community import greedy_modularity_communities, partition_as_assignment
from .errors import CatmodError, SweepError
from .lexicon import LEVELS, assignment_at_level, load_lexicon
from .modularity import DEFAULT_MODE, MODES, modularity_report
from .simgraph import knn_graph, similarity_matrix, write_edge_list
from .sweep import (
    SUBSETS,
    correlate_grid,
    default_cache_dir,
    load_manifest,
    load_report_dir,
    load_task_dir,
    rank_single_categories,
    run_modularity_grid,
    run_task_grid,
    write_grid_outputs,
)
from .tasks import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    bli_task,
    load_dictionary,
    load_labeled_texts,
    load_word_pairs,
    sentiment_task,
    wordsim_task,
)
from .vecstore import POLICIES, load_word2vec_text, resolve

logger = logging.getLogger("catmod")


class UsageError(CatmodError):
    stage = "args"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dump(obj, path) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _load_graph_inputs(args):
    lexicon = load_lexicon(args.lexicon, args.lexicon_mode)
    table = load_word2vec_text(args.vectors, limit=args.limit, keep=lexicon.words)
    return resolve(table, lexicon, args.policy)


def cmd_modularity(args) -> int:
    ws = _load_graph_inputs(args)
    g = knn_graph(similarity_matrix(ws), args.k)
    report = modularity_report(g, assignment_at_level(ws.lexicon, args.level), args.mode)
    doc = report.to_dict()
    doc["missing"] = list(ws.missing)
    if args.out:
        _dump(doc, args.out)
    if args.edges:
        write_edge_list(g, args.edges)
    print(f"{report.Q_norm:.6f}")
    return 0


def cmd_communities(args) -> int:
    ws = _load_graph_inputs(args)
    g = knn_graph(similarity_matrix(ws), args.k)
    partition = greedy_modularity_communities(g)
    report = modularity_report(g, partition_as_assignment(partition), args.mode)
    doc = {
        "k": args.k,
        "words": list(ws.words),
        "partition": partition.to_dict(),
        "report": report.to_dict(),
    }
    if args.out:
        _dump(doc, args.out)
    print(f"{partition.num_communities} communities, Q_norm {report.Q_norm:.6f}")
    return 0


def cmd_task(args) -> int:
    if args.task == "sentiment":
        table = load_word2vec_text(args.vectors, limit=args.limit)
        results = sentiment_task(table, load_labeled_texts(args.data), args.trials, args.seed, reg=args.svm_reg)
    elif args.task == "wordsim":
        table = load_word2vec_text(args.vectors, limit=args.limit)
        results = (wordsim_task(table, load_word_pairs(args.data), args.trials, args.seed),)
    else:
        src = load_word2vec_text(args.src_vectors, limit=args.limit)
        tgt = load_word2vec_text(args.tgt_vectors, limit=args.limit)
        test = load_dictionary(args.test_dictionary, args.direction) if args.test_dictionary else None
        results = (bli_task(src, tgt, load_dictionary(args.dictionary, args.direction), args.trials, args.seed,
                            train_size=args.train_size, test_size=args.test_size, test_dictionary=test),)
    docs = [r.to_dict() for r in results]
    _dump(docs[0] if len(docs) == 1 else docs, args.out)
    if args.out:
        for r in results:
            print(f"{r.metric} {r.value:.6f}")
    return 0


def cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    cache = args.cache_dir or default_cache_dir()
    grid = run_modularity_grid(manifest, cache, jobs=args.jobs)
    tasks = None if args.no_tasks else run_task_grid(manifest, jobs=args.jobs)
    write_grid_outputs(args.out, manifest, grid, tasks)
    failures = dict(grid.failures)
    if tasks is not None:
        failures.update(tasks.failures)
    print(f"{len(grid.reports)} reports ({grid.cache_hits} cached), {len(failures)} failures")
    for key, msg in sorted(failures.items()):
        print(f"failed {key}: {msg}", file=sys.stderr)
    if failures and args.strict:
        raise SweepError(f"{len(failures)} grid cells failed")
    return 0


def _subsets(values):
    if not values:
        return ["merged"]
    return list(SUBSETS) if "all" in values else values


def cmd_correlate(args) -> int:
    reports, models = load_report_dir(args.reports)
    values, task_models = load_task_dir(args.tasks)
    models = {**task_models, **models}
    table = correlate_grid(reports, values, models, _subsets(args.subset))
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.with_suffix(".json").write_text(table.to_json() + "\n", encoding="utf-8")
        out.with_suffix(".csv").write_text(table.to_csv(), encoding="utf-8")
    elif args.format == "csv":
        sys.stdout.write(table.to_csv())
    else:
        sys.stdout.write(table.to_json() + "\n")
    return 0


def cmd_rank_categories(args) -> int:
    reports, models = load_report_dir(args.reports)
    values, task_models = load_task_dir(args.tasks)
    ranked, omitted = rank_single_categories(reports, values, {**task_models, **models},
                                             args.metric, args.level, args.k, args.subset)
    _dump({"metric": args.metric, "level": args.level, "k": args.k, "subset": args.subset,
           "ranking": [{"category": c, "rho": r} for c, r in ranked], "omitted": omitted}, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="catmod", description="Categorical modularity of word embeddings.")
    parser.add_argument("--version", action="version", version=f"catmod {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_args(p):
        p.add_argument("--vectors", required=True, help="word2vec text file")
        p.add_argument("--lexicon", required=True, help="lexicon TSV")
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--mode", choices=MODES, default=DEFAULT_MODE)
        p.add_argument("--policy", choices=POLICIES, default="fail")
        p.add_argument("--lexicon-mode", choices=("generic", "binder-strict"), default="generic")
        p.add_argument("--limit", type=int, default=None, help="read at most this many vectors")
        p.add_argument("--out", default=None, help="JSON output path")

    p = sub.add_parser("modularity", help="score one embedding table")
    graph_args(p)
    p.add_argument("--level", type=int, choices=LEVELS, default=3)
    p.add_argument("--edges", default=None, help="also write the k-NN edge list as TSV")
    p.set_defaults(func=cmd_modularity)

    p = sub.add_parser("communities", help="greedy modularity communities (control clusters)")
    graph_args(p)
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("task", help="run one downstream task")
    p.add_argument("task", choices=("sentiment", "wordsim", "bli"))
    p.add_argument("--vectors", help="word2vec text file (sentiment, wordsim)")
    p.add_argument("--data", help="task TSV (sentiment, wordsim)")
    p.add_argument("--src-vectors")
    p.add_argument("--tgt-vectors")
    p.add_argument("--dictionary", help="source<TAB>target training pairs (bli)")
    p.add_argument("--test-dictionary", help="fixed test pairs (bli)")
    p.add_argument("--direction", choices=("to-english", "from-english", "generic"), default="generic")
    p.add_argument("--train-size", type=int, default=None)
    p.add_argument("--test-size", type=int, default=None)
    p.add_argument("--svm-reg", type=float, default=1.0,
                   help="SVM L2 weight (sentiment); sklearn's C corresponds to 1 / (C * n_train)")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_task)

    p = sub.add_parser("sweep", help="run the full grid from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cache-dir", default=None, help="defaults to $CATMOD_CACHE_DIR or ~/.cache/catmod")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-tasks", action="store_true", help="skip downstream tasks")
    p.add_argument("--strict", action="store_true", help="exit 1 if any grid cell fails")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("correlate", help="Spearman tables from sweep outputs")
    p.add_argument("--reports", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--subset", action="append", choices=SUBSETS + ("all",))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="path prefix; writes <prefix>.json and <prefix>.csv")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("rank-categories", help="rank categories by Q_c correlation")
    p.add_argument("--reports", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--level", type=int, choices=LEVELS, default=3)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--subset", choices=SUBSETS, default="merged")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rank_categories)
    return parser


def _check_task_args(args) -> None:
    if args.command != "task":
        return
    need = ("vectors", "data") if args.task in ("sentiment", "wordsim") else ("src_vectors", "tgt_vectors", "dictionary")
    missing = [f"--{n.replace('_', '-')}" for n in need if getattr(args, n) is None]
    if missing:
        raise UsageError(f"task {args.task} requires {', '.join(missing)}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        _check_task_args(args)
        return args.func(args)
    except CatmodError as exc:
        print(f"error:{exc.stage}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error:input: {_one_line(exc)}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error:internal: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 2


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
