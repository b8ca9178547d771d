"""Experiment grid over embedding tables, category levels and k.

A manifest is JSON::

    {
      "seed": 17, "trials": 30,
      "levels": [1, 2, 3], "ks": [2, 3, 4],
      "mode": "multigraph-sum", "policy": "skip-missing", "svm_reg": 1.0,
      "runs": [
        {"model": "ft", "language": "nl",
         "vectors": "vectors/cc.nl.300.vec", "lexicon": "words/nl.tsv",
         "limit": null,
         "tasks": {
           "sentiment": "tasks/imdb.nl.tsv",
           "wordsim": "tasks/wordsim.nl.tsv",
           "bli": {
             "from-english": {"dictionary": "dict/en-nl.txt", "english_vectors": "vectors/cc.en.300.vec"},
             "to-english": {"dictionary": "dict/nl-en.txt", "english_vectors": "vectors/cc.en.300.vec"}
           }
         }}
      ]
    }

Relative paths are resolved against the manifest's directory. Each run
yields one report per (level, k) plus a control report per k scored on the
run's own greedy-modularity communities.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .community import greedy_modularity_communities, partition_as_assignment
from .errors import CatmodError, ManifestError, UndefinedCorrelationError
from .lexicon import assignment_at_level, load_lexicon
from .modularity import DEFAULT_MODE, MODES, ModularityReport, modularity_report
from .simgraph import knn_graph, similarity_matrix
from .stats import spearman
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
from .vecstore import POLICIES, ResolvedWordSet, load_word2vec_text, resolve

logger = logging.getLogger(__name__)

CONTROL = "C"
SUBSETS = ("merged", "ft", "m", "s")
LOSS_METRICS = frozenset({"wordsim-mse"})
TASK_METRICS = ("sentiment-accuracy", "sentiment-precision", "wordsim-mse",
                "bli-from-english", "bli-to-english")
_CACHE_FORMAT = 1


def default_cache_dir() -> Path:
    env = os.environ.get("CATMOD_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "catmod"


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class RunSpec:
    model: str
    language: str
    vectors: Path
    lexicon: Path
    limit: Optional[int] = None
    tasks: Mapping = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        return f"{self.language}-{self.model}"


@dataclass(frozen=True)
class RunManifest:
    runs: tuple[RunSpec, ...]
    seed: int = DEFAULT_SEED
    trials: int = DEFAULT_TRIALS
    levels: tuple[int, ...] = (1, 2, 3)
    ks: tuple[int, ...] = (2, 3, 4)
    mode: str = DEFAULT_MODE
    policy: str = "skip-missing"
    control: bool = True
    svm_reg: float = 1.0

    def __post_init__(self):
        seen = set()
        for run in self.runs:
            key = (run.model, run.language)
            if key in seen:
                raise ManifestError(f"duplicate run for model {run.model!r}, language {run.language!r}")
            seen.add(key)
        if self.mode not in MODES:
            raise ManifestError(f"unknown mode {self.mode!r}")
        if self.policy not in POLICIES:
            raise ManifestError(f"unknown policy {self.policy!r}")
        if any(level not in (1, 2, 3) for level in self.levels):
            raise ManifestError("levels must be drawn from 1, 2, 3")
        if any(k < 1 for k in self.ks):
            raise ManifestError("k values must be positive")
        if not self.svm_reg > 0:
            raise ManifestError("svm_reg must be positive")

    @property
    def models(self) -> dict[str, str]:
        return {run.run_id: run.model for run in self.runs}


def _resolve_paths(obj, base: Path):
    if isinstance(obj, dict):
        return {key: _resolve_paths(val, base) for key, val in obj.items()}
    if isinstance(obj, str):
        return str((base / obj).resolve()) if not os.path.isabs(obj) else obj
    return obj


def load_manifest(path: Union[str, os.PathLike]) -> RunManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    base = path.parent.resolve()
    try:
        runs = tuple(
            RunSpec(
                model=str(r["model"]),
                language=str(r["language"]),
                vectors=Path(_resolve_paths(r["vectors"], base)),
                lexicon=Path(_resolve_paths(r["lexicon"], base)),
                limit=r.get("limit"),
                tasks=_resolve_paths(r.get("tasks", {}), base),
            )
            for r in raw["runs"]
        )
    except KeyError as exc:
        raise ManifestError(f"{path}: missing field {exc}") from exc
    options = {key: raw[key] for key in ("seed", "trials", "mode", "policy", "control", "svm_reg") if key in raw}
    for key in ("levels", "ks"):
        if key in raw:
            options[key] = tuple(raw[key])
    return RunManifest(runs=runs, **options)


# ---------------------------------------------------------------------------
# cache


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ReportCache:
    """Disk cache of modularity reports keyed by a hash of their inputs.

    Two layers: resolved vector slices keyed by the vector file's identity
    (path, size, mtime) and the lexicon word list, so unchanged inputs skip
    re-reading large files; and reports keyed by the content of the slice,
    the labels, k and mode. Writes go through a temporary file and
    ``os.replace`` so concurrent writers never expose partial files.
    """

    def __init__(self, root: Union[str, os.PathLike, None] = None):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def _slice_path(self, run: RunSpec, words: Sequence[str], policy: str) -> Path:
        st = os.stat(run.vectors)
        ident = json.dumps([str(Path(run.vectors).resolve()), st.st_size, st.st_mtime_ns,
                            run.limit, list(words), policy, _CACHE_FORMAT], ensure_ascii=False)
        return self.root / "slices" / (hashlib.sha256(ident.encode("utf-8")).hexdigest() + ".npz")

    def load_slice(self, run: RunSpec, lexicon, policy: str) -> ResolvedWordSet:
        path = self._slice_path(run, lexicon.words, policy)
        if path.exists():
            with np.load(path, allow_pickle=False) as npz:
                words = tuple(npz["words"].tolist())
                vectors = npz["vectors"]
                missing = tuple(npz["missing"].tolist())
            vectors.setflags(write=False)
            sub = lexicon.subset(words) if missing else lexicon
            return ResolvedWordSet(words, vectors, missing, sub)
        table = load_word2vec_text(run.vectors, limit=run.limit, keep=lexicon.words,
                                   source_label=run.run_id)
        ws = resolve(table, lexicon, policy)
        buf = io.BytesIO()
        np.savez(buf, words=np.array(ws.words, dtype=str), vectors=ws.vectors,
                 missing=np.array(ws.missing, dtype=str))
        _atomic_write(path, buf.getvalue())
        return ws

    @staticmethod
    def report_key(ws: ResolvedWordSet, labels: Optional[Sequence[str]], k: int, mode: str) -> str:
        h = hashlib.sha256()
        h.update(f"catmod-report/{_CACHE_FORMAT}/{mode}/{k}\n".encode())
        h.update("\x1f".join(ws.words).encode("utf-8"))
        h.update(np.ascontiguousarray(ws.vectors, dtype="<f8").tobytes())
        h.update(b"control" if labels is None else "\x1f".join(labels).encode("utf-8"))
        return h.hexdigest()

    def get_or_compute(self, key: str, compute) -> ModularityReport:
        path = self.root / "reports" / f"{key}.json"
        if path.exists():
            self.hits += 1
            return ModularityReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
        self.misses += 1
        report = compute()
        _atomic_write(path, report.to_json().encode("utf-8"))
        return report


# ---------------------------------------------------------------------------
# modularity grid


@dataclass
class GridResult:
    reports: dict = field(default_factory=dict)  # (run_id, row, k) -> ModularityReport
    failures: dict = field(default_factory=dict)  # "run_id[:row:k]" -> message
    cache_hits: int = 0
    cache_misses: int = 0


def _run_modularity(run: RunSpec, manifest: RunManifest, cache_root: Path):
    cache = ReportCache(cache_root)
    reports, failures = {}, {}
    try:
        lexicon = load_lexicon(run.lexicon)
        ws = cache.load_slice(run, lexicon, manifest.policy)
    except (CatmodError, OSError) as exc:
        return reports, {run.run_id: f"{getattr(exc, 'stage', 'io')}: {exc}"}, cache.hits, cache.misses
    sim = None
    graphs = {}

    def graph(k):
        nonlocal sim
        if k not in graphs:
            if sim is None:
                sim = similarity_matrix(ws)
            graphs[k] = knn_graph(sim, k)
        return graphs[k]

    cells = [(level, k) for level in manifest.levels for k in manifest.ks]
    if manifest.control:
        cells += [(CONTROL, k) for k in manifest.ks]
    for row, k in cells:
        try:
            if row == CONTROL:
                key = cache.report_key(ws, None, k, manifest.mode)
                compute = lambda k=k: modularity_report(
                    graph(k), partition_as_assignment(greedy_modularity_communities(graph(k))), manifest.mode)
            else:
                assign = assignment_at_level(ws.lexicon, row)
                key = cache.report_key(ws, ws.lexicon.labels_at(row), k, manifest.mode)
                compute = lambda k=k, assign=assign: modularity_report(graph(k), assign, manifest.mode)
            reports[(run.run_id, row, k)] = cache.get_or_compute(key, compute)
        except CatmodError as exc:
            failures[f"{run.run_id}:{row}:{k}"] = f"{exc.stage}: {exc}"
    return reports, failures, cache.hits, cache.misses


def run_modularity_grid(manifest: RunManifest, cache_dir=None, jobs: int = 1) -> GridResult:
    """Compute (or fetch from cache) every report of the grid.

    Failures are isolated per run and per cell; the rest of the grid
    still completes.
    """
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    result = GridResult()
    if jobs > 1 and len(manifest.runs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_modularity, manifest.runs,
                                    [manifest] * len(manifest.runs), [root] * len(manifest.runs)))
    else:
        outputs = [_run_modularity(run, manifest, root) for run in manifest.runs]
    for reports, failures, hits, misses in outputs:
        result.reports.update(reports)
        result.failures.update(failures)
        result.cache_hits += hits
        result.cache_misses += misses
    return result


# ---------------------------------------------------------------------------
# task grid


@dataclass
class TaskGrid:
    results: dict = field(default_factory=dict)  # (run_id, metric) -> TaskResult
    failures: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {key: res.value for key, res in self.results.items()}


def _run_tasks(run: RunSpec, manifest: RunManifest):
    results, failures = {}, {}
    if not run.tasks:
        return results, failures
    try:
        table = load_word2vec_text(run.vectors, limit=run.limit, source_label=run.run_id)
    except CatmodError as exc:
        return results, {run.run_id: f"{exc.stage}: {exc}"}
    seed, trials = manifest.seed, manifest.trials
    english: dict[str, object] = {}

    def english_table(spec):
        p = spec["english_vectors"]
        if p not in english:
            english[p] = load_word2vec_text(p, limit=spec.get("limit"))
        return english[p]

    jobs = []
    if "sentiment" in run.tasks:
        jobs.append(("sentiment", lambda: sentiment_task(table, load_labeled_texts(run.tasks["sentiment"]), trials, seed,
                                                         reg=manifest.svm_reg)))
    if "wordsim" in run.tasks:
        jobs.append(("wordsim", lambda: (wordsim_task(table, load_word_pairs(run.tasks["wordsim"]), trials, seed),)))
    for direction, spec in run.tasks.get("bli", {}).items():
        if direction not in ("from-english", "to-english"):
            failures[f"{run.run_id}:bli:{direction}"] = "task: unknown BLI direction"
            continue

        def bli(direction=direction, spec=spec):
            en = english_table(spec)
            src, tgt = (en, table) if direction == "from-english" else (table, en)
            test = load_dictionary(spec["test_dictionary"], direction) if "test_dictionary" in spec else None
            return (bli_task(src, tgt, load_dictionary(spec["dictionary"], direction), trials, seed,
                             train_size=spec.get("train_size"), test_size=spec.get("test_size"),
                             test_dictionary=test),)
        jobs.append((f"bli-{direction}", bli))

    for name, job in jobs:
        try:
            out = job()
        except CatmodError as exc:
            failures[f"{run.run_id}:{name}"] = f"{exc.stage}: {exc}"
            continue
        if name == "sentiment":
            results[(run.run_id, "sentiment-accuracy")] = out[0]
            results[(run.run_id, "sentiment-precision")] = out[1]
        elif name == "wordsim":
            results[(run.run_id, "wordsim-mse")] = out[0]
        else:
            results[(run.run_id, name)] = out[0]
    return results, failures


def run_task_grid(manifest: RunManifest, jobs: int = 1) -> TaskGrid:
    grid = TaskGrid()
    if jobs > 1 and len(manifest.runs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_tasks, manifest.runs, [manifest] * len(manifest.runs)))
    else:
        outputs = [_run_tasks(run, manifest) for run in manifest.runs]
    for results, failures in outputs:
        grid.results.update(results)
        grid.failures.update(failures)
    return grid


# ---------------------------------------------------------------------------
# correlation tables


def row_label(row, k) -> str:
    return f"{row}, {k}"


def _row_order(key):
    row, k = key
    return (1, 0, k) if row == CONTROL else (0, int(row), k)


@dataclass(frozen=True)
class CorrelationCell:
    row: str
    metric: str
    subset: str
    rho: Optional[float]
    n: int
    note: str = ""


@dataclass(frozen=True)
class CorrelationTable:
    cells: tuple[CorrelationCell, ...]

    def get(self, row: str, metric: str, subset: str = "merged") -> CorrelationCell:
        for cell in self.cells:
            if (cell.row, cell.metric, cell.subset) == (row, metric, subset):
                return cell
        raise KeyError((row, metric, subset))

    def to_dict(self) -> dict:
        return {"cells": [cell.__dict__ for cell in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row", "metric", "subset", "rho", "n"])
        for c in self.cells:
            writer.writerow([c.row, c.metric, c.subset, "" if c.rho is None else repr(c.rho), c.n])
        return buf.getvalue()


def _subset_runs(models: Mapping[str, str], subset: str) -> set[str]:
    if subset == "merged":
        return set(models)
    return {run for run, model in models.items() if model == subset}


def _sign(metric: str) -> float:
    return -1.0 if metric in LOSS_METRICS or "mse" in metric.lower() else 1.0


def correlate_grid(
    reports: Mapping,
    task_values: Mapping,
    models: Mapping[str, str],
    subsets: Union[str, Sequence[str]] = "merged",
) -> CorrelationTable:
    """Spearman correlation of Q_norm against each task metric.

    ``reports`` maps (run_id, row, k) to a report or a Q_norm value;
    ``task_values`` maps (run_id, metric) to the task's mean score;
    ``models`` maps run_id to its model tag. Loss metrics are negated so a
    positive correlation always means higher modularity predicts better
    performance. Cells with fewer than 3 runs, or a constant sample, carry
    ``rho=None``.
    """
    if isinstance(subsets, str):
        subsets = [subsets]
    qnorm = {key: getattr(val, "Q_norm", val) for key, val in reports.items()}
    hyper = sorted({(row, k) for _, row, k in qnorm}, key=_row_order)
    metrics = [m for m in TASK_METRICS if any(key[1] == m for key in task_values)]
    metrics += sorted({m for _, m in task_values} - set(metrics))
    cells = []
    for subset in subsets:
        runs = _subset_runs(models, subset)
        for row, k in hyper:
            for metric in metrics:
                sample = sorted(r for r in runs if (r, row, k) in qnorm and (r, metric) in task_values)
                x = [qnorm[(r, row, k)] for r in sample]
                y = [_sign(metric) * task_values[(r, metric)] for r in sample]
                rho, note = None, ""
                if len(sample) < 3:
                    note = "unavailable: fewer than 3 runs"
                else:
                    try:
                        rho = spearman(x, y)
                    except UndefinedCorrelationError as exc:
                        note = f"unavailable: {exc}"
                cells.append(CorrelationCell(row_label(row, k), metric, subset, rho, len(sample), note))
    return CorrelationTable(tuple(cells))


def rank_single_categories(
    reports: Mapping,
    task_values: Mapping,
    models: Mapping[str, str],
    metric: str,
    level: int,
    k: int,
    subset: str = "merged",
) -> tuple[list[tuple[str, float]], dict[str, str]]:
    """Rank categories by how well their Q_c tracks ``metric`` across runs.

    Returns the (category, rho) list sorted by rho descending, and a dict of
    categories left out with the reason.
    """
    runs = sorted(r for r in _subset_runs(models, subset)
                  if (r, level, k) in reports and (r, metric) in task_values)
    per_category: dict[str, list[tuple[float, float]]] = {}
    for r in runs:
        rep = reports[(r, level, k)]
        for label, qc in rep.category_scores().items():
            per_category.setdefault(label, []).append((qc, _sign(metric) * task_values[(r, metric)]))
    ranked, omitted = [], {}
    for label, pairs in per_category.items():
        if len(pairs) < 3:
            omitted[label] = "unavailable: fewer than 3 runs"
            continue
        try:
            ranked.append((label, spearman([p[0] for p in pairs], [p[1] for p in pairs])))
        except UndefinedCorrelationError as exc:
            omitted[label] = f"unavailable: {exc}"
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked, omitted


# ---------------------------------------------------------------------------
# on-disk grid outputs


def report_filename(run_id: str, row, k) -> str:
    return f"{run_id}__{row}-k{k}.json"


def write_grid_outputs(out_dir, manifest: RunManifest, grid: GridResult, tasks: Optional[TaskGrid] = None) -> None:
    out = Path(out_dir)
    meta = {run.run_id: run for run in manifest.runs}
    for (run_id, row, k), rep in sorted(grid.reports.items(), key=lambda kv: (kv[0][0], _row_order(kv[0][1:]))):
        run = meta[run_id]
        doc = {"run": run_id, "model": run.model, "language": run.language, "row": row, "report": rep.to_dict()}
        _atomic_write(out / "reports" / report_filename(run_id, row, k),
                      json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True).encode("utf-8"))
    if tasks is not None:
        by_run: dict[str, dict] = {}
        for (run_id, metric), res in tasks.results.items():
            by_run.setdefault(run_id, {})[metric] = res.to_dict()
        for run_id, results in sorted(by_run.items()):
            run = meta[run_id]
            doc = {"run": run_id, "model": run.model, "language": run.language, "results": results}
            _atomic_write(out / "tasks" / f"{run_id}.json",
                          json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True).encode("utf-8"))
    failures = dict(grid.failures)
    if tasks is not None:
        failures.update(tasks.failures)
    _atomic_write(out / "failures.json", json.dumps(failures, indent=2, sort_keys=True).encode("utf-8"))


def load_report_dir(path) -> tuple[dict, dict]:
    """Read ``reports/*.json`` written by :func:`write_grid_outputs`."""
    reports, models = {}, {}
    for file in sorted(Path(path).glob("*.json")):
        doc = json.loads(file.read_text(encoding="utf-8"))
        rep = ModularityReport.from_dict(doc["report"])
        reports[(doc["run"], doc["row"], rep.k)] = rep
        models[doc["run"]] = doc["model"]
    return reports, models


def load_task_dir(path) -> tuple[dict, dict]:
    values, models = {}, {}
    for file in sorted(Path(path).glob("*.json")):
        doc = json.loads(file.read_text(encoding="utf-8"))
        for metric, res in doc["results"].items():
            values[(doc["run"], metric)] = res["value"]
        models[doc["run"]] = doc["model"]
    return values, models
