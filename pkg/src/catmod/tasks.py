"""Downstream tasks used to validate modularity scores.

* sentiment: mean-of-word-vectors text features, linear SVM, accuracy and
  precision of the positive class;
* word similarity: (euclidean, manhattan, cosine) pair features, linear
  regression onto gold scores, test MSE;
* bilingual lexicon induction: multi-output linear regression from source
  vectors to target vectors, mean cosine of prediction vs. truth.

Every task repeats a seeded random split ``trials`` times. Trial ``t`` draws
from ``numpy.random.default_rng([seed, t, attempt])`` so trials are
independent of each other and of execution order.
"""

from __future__ import annotations

import logging
import unicodedata
import warnings
from dataclasses import dataclass, field
from os import PathLike
from typing import Optional, Sequence, Union

import numpy as np

from .errors import TaskError
from .vecstore import EmbeddingTable

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 30
DEFAULT_SEED = 17
OLS_DAMPING = 1e-8


class EmptyEmbeddingWarning(UserWarning):
    """A text had no in-vocabulary tokens and was embedded as zeros."""


class ZeroDivisionPrecisionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TaskResult:
    task: str
    metric: str
    per_trial: tuple[float, ...]
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.per_trial) < 1:
            raise ValueError("a task result needs at least one trial")

    @property
    def trials(self) -> int:
        return len(self.per_trial)

    @property
    def value(self) -> float:
        return float(np.mean(self.per_trial))

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "metric": self.metric,
            "value": self.value,
            "trials": self.trials,
            "per_trial": list(self.per_trial),
            "notes": self.notes,
        }


def trial_rng(seed: int, trial: int, attempt: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, trial, attempt])


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class LabeledTextSet:
    items: tuple[tuple[int, str], ...]
    train_fraction: float = 0.8

    def __post_init__(self):
        labels = {label for label, _ in self.items}
        if labels != {0, 1}:
            raise TaskError(f"sentiment data needs both labels 0 and 1, found {sorted(labels)}")
        if any(not text.strip() for _, text in self.items):
            raise TaskError("sentiment data contains an empty text")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")

    @property
    def labels(self) -> np.ndarray:
        return np.array([label for label, _ in self.items], dtype=np.int64)

    @property
    def texts(self) -> list[str]:
        return [text for _, text in self.items]


@dataclass(frozen=True)
class WordPairSet:
    pairs: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        for w1, w2, score in self.pairs:
            if not 0.0 <= score <= 4.0:
                raise TaskError(f"similarity score {score} for ({w1}, {w2}) is outside [0, 4]")


@dataclass(frozen=True)
class BilingualDictionary:
    entries: tuple[tuple[str, str], ...]
    direction: str = "generic"

    def __post_init__(self):
        if not self.entries:
            raise TaskError("bilingual dictionary is empty")
        if self.direction not in ("to-english", "from-english", "generic"):
            raise ValueError(f"unknown direction {self.direction!r}")


def _read_tsv(path, nfields: int, allow_space: bool = False) -> list[tuple[int, list[str]]]:
    rows = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) == 1 and allow_space:
                    parts = line.split()
                if len(parts) != nfields:
                    raise TaskError(f"{path}: line {lineno}: expected {nfields} tab-separated fields, found {len(parts)}")
                rows.append((lineno, parts))
    except FileNotFoundError as exc:
        raise TaskError(f"task data file not found: {path}") from exc
    except UnicodeDecodeError as exc:
        raise TaskError(f"{path}: not valid UTF-8 ({exc.reason})") from exc
    return rows


def load_labeled_texts(path: Union[str, PathLike], train_fraction: float = 0.8) -> LabeledTextSet:
    """Read ``label<TAB>text`` rows with labels 0/1."""
    items = []
    for lineno, (label, text) in _read_tsv(path, 2):
        if label.strip() not in ("0", "1"):
            raise TaskError(f"{path}: line {lineno}: label must be 0 or 1, got {label!r}")
        items.append((int(label), text))
    return LabeledTextSet(tuple(items), train_fraction)


def load_word_pairs(path: Union[str, PathLike]) -> WordPairSet:
    pairs = []
    for lineno, (w1, w2, score) in _read_tsv(path, 3):
        try:
            value = float(score)
        except ValueError as exc:
            raise TaskError(f"{path}: line {lineno}: bad score {score!r}") from exc
        pairs.append((_nfc(w1.strip()), _nfc(w2.strip()), value))
    return WordPairSet(tuple(pairs))


def load_dictionary(path: Union[str, PathLike], direction: str = "generic") -> BilingualDictionary:
    """Read ``source<TAB>target`` rows; whitespace-separated MUSE files also parse."""
    entries = tuple((_nfc(s.strip()), _nfc(t.strip())) for _, (s, t) in _read_tsv(path, 2, allow_space=True))
    return BilingualDictionary(entries, direction)


def _nfc(word: str) -> str:
    return unicodedata.normalize("NFC", word)


# ---------------------------------------------------------------------------
# text features


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with leading/trailing punctuation removed; case kept."""
    tokens = []
    for raw in _nfc(text).split():
        start, end = 0, len(raw)
        while start < end and unicodedata.category(raw[start]).startswith("P"):
            start += 1
        while end > start and unicodedata.category(raw[end - 1]).startswith("P"):
            end -= 1
        if start < end:
            tokens.append(raw[start:end])
    return tokens


def _mean_vector(table: EmbeddingTable, text: str) -> tuple[np.ndarray, bool]:
    vecs = [table.entries[t] for t in tokenize(text) if t in table.entries]
    if not vecs:
        return np.zeros(table.dimension), False
    return np.mean(np.asarray(vecs, dtype=np.float64), axis=0), True


def embed_text_mean(table: EmbeddingTable, text: str) -> np.ndarray:
    vec, found = _mean_vector(table, text)
    if not found:
        warnings.warn("no token of the text is in the vocabulary; using a zero vector",
                      EmptyEmbeddingWarning, stacklevel=2)
    return vec


def embed_texts(table: EmbeddingTable, texts: Sequence[str]) -> tuple[np.ndarray, int]:
    """Stack mean embeddings; also return how many texts had no known token."""
    out = np.empty((len(texts), table.dimension))
    empty = 0
    for i, text in enumerate(texts):
        out[i], found = _mean_vector(table, text)
        empty += not found
    return out, empty


# ---------------------------------------------------------------------------
# linear SVM


class LinearSVM:
    """L2-regularized hinge-loss SVM trained by stochastic subgradient steps.

    Minimizes ``reg/2 * |w|^2 + mean(max(0, 1 - y (w.x + b)))`` with step
    size ``1 / (reg * t)``, one pass over a shuffled training set per epoch.
    The bias is not regularized. The fitted model is the running average of
    all iterates, which smooths the noisy last iterate.
    """

    def __init__(self, reg: float = 1.0, epochs: int = 20):
        if reg <= 0:
            raise ValueError("reg must be positive")
        self.reg = reg
        self.epochs = epochs
        self.coef_: Optional[np.ndarray] = None
        self.intercept_ = 0.0
        self.objective_trace_: list[float] = []

    def objective(self, X: np.ndarray, y01: np.ndarray) -> float:
        y = np.where(y01 > 0, 1.0, -1.0)
        margins = y * (X @ self.coef_ + self.intercept_)
        return 0.5 * self.reg * float(self.coef_ @ self.coef_) + float(np.mean(np.maximum(0.0, 1.0 - margins)))

    def fit(self, X: np.ndarray, y01: np.ndarray, rng: np.random.Generator) -> "LinearSVM":
        X = np.asarray(X, dtype=np.float64)
        y = np.where(np.asarray(y01) > 0, 1.0, -1.0)
        w = np.zeros(X.shape[1])
        b = 0.0
        w_sum = np.zeros_like(w)
        b_sum = 0.0
        t = 0
        self.objective_trace_ = []
        for _ in range(self.epochs):
            for i in rng.permutation(X.shape[0]):
                t += 1
                eta = 1.0 / (self.reg * t)
                margin = y[i] * (X[i] @ w + b)
                w *= 1.0 - eta * self.reg
                if margin < 1.0:
                    w += eta * y[i] * X[i]
                    b += eta * y[i]
                w_sum += w
                b_sum += b
            self.coef_, self.intercept_ = w_sum / t, b_sum / t
            self.objective_trace_.append(self.objective(X, y01))
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


def precision_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    predicted = int(np.sum(y_pred == 1))
    if predicted == 0:
        warnings.warn("no positive predictions; precision taken as 0", ZeroDivisionPrecisionWarning, stacklevel=2)
        return 0.0
    return float(np.sum((y_pred == 1) & (y_true == 1)) / predicted)


def _split(n: int, train_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    return order[:n_train], order[n_train:]


def sentiment_task(
    table: EmbeddingTable,
    data: LabeledTextSet,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    reg: float = 1.0,
    epochs: int = 20,
    max_attempts: int = 10,
) -> tuple[TaskResult, TaskResult]:
    """Mean accuracy and positive-class precision over ``trials`` splits."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    X, empty = embed_texts(table, data.texts)
    if empty:
        logger.warning("%d of %d texts have no in-vocabulary token", empty, len(data.items))
    y = data.labels
    accuracy, precision = [], []
    zero_precision = 0
    for trial in range(trials):
        for attempt in range(max_attempts):
            rng = trial_rng(seed, trial, attempt)
            train, test = _split(len(y), data.train_fraction, rng)
            if len(set(y[train].tolist())) == 2 and len(set(y[test].tolist())) == 2:
                break
        else:
            raise TaskError(f"trial {trial}: no split with both classes in train and test after {max_attempts} attempts")
        model = LinearSVM(reg=reg, epochs=epochs).fit(X[train], y[train], rng)
        pred = model.predict(X[test])
        accuracy.append(float(np.mean(pred == y[test])))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ZeroDivisionPrecisionWarning)
            precision.append(precision_score(y[test], pred))
        zero_precision += len(caught)
    notes = {"empty_texts": empty, "zero_division_trials": zero_precision,
             "features": "mean of word vectors"}
    return (TaskResult("sentiment", "accuracy", tuple(accuracy), notes),
            TaskResult("sentiment", "precision", tuple(precision), notes))


# ---------------------------------------------------------------------------
# linear regression


def fit_ols(X: np.ndarray, Y: np.ndarray, damping: float = OLS_DAMPING) -> np.ndarray:
    """Least squares with intercept via damped normal equations.

    Returns coefficients of shape (p + 1,) or (p + 1, outputs); row 0 is the
    intercept. Every output column shares the same design matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    design = np.hstack([np.ones((X.shape[0], 1)), X])
    gram = design.T @ design
    gram[np.diag_indices_from(gram)] += damping
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise TaskError("regression design is rank deficient even after damping")
    try:
        return np.linalg.solve(gram, design.T @ np.asarray(Y, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise TaskError(f"normal equations could not be solved: {exc}") from exc


def predict_ols(coef: np.ndarray, X: np.ndarray) -> np.ndarray:
    return coef[0] + np.asarray(X, dtype=np.float64) @ coef[1:]


def wordsim_features(table: EmbeddingTable, w1: str, w2: str) -> np.ndarray:
    """(euclidean distance, manhattan distance, cosine similarity)."""
    u = np.asarray(table[w1], dtype=np.float64)
    v = np.asarray(table[w2], dtype=np.float64)
    diff = u - v
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    cos = 0.0 if nu == 0.0 or nv == 0.0 else float(np.clip(u @ v / (nu * nv), -1.0, 1.0))
    return np.array([np.sqrt(diff @ diff), np.abs(diff).sum(), cos])


def wordsim_task(
    table: EmbeddingTable,
    data: WordPairSet,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    train_fraction: float = 0.8,
) -> TaskResult:
    """Mean test MSE of a linear regression from pair features to gold scores."""
    feats, scores, skipped = [], [], 0
    for w1, w2, score in data.pairs:
        if w1 not in table or w2 not in table:
            skipped += 1
            continue
        feats.append(wordsim_features(table, w1, w2))
        scores.append(score)
    if skipped:
        logger.warning("%d word pairs skipped: word not in vocabulary", skipped)
    if len(scores) < 10:
        raise TaskError(f"need at least 10 resolvable word pairs, found {len(scores)}")
    X = np.array(feats)
    y = np.array(scores)
    mse = []
    for trial in range(trials):
        train, test = _split(len(y), train_fraction, trial_rng(seed, trial))
        coef = fit_ols(X[train], y[train])
        resid = predict_ols(coef, X[test]) - y[test]
        mse.append(float(np.mean(resid ** 2)))
    return TaskResult("wordsim", "mean-MSE", tuple(mse), {"pairs": len(y), "skipped_pairs": skipped})


def _row_cosines(P: np.ndarray, T: np.ndarray) -> np.ndarray:
    num = np.sum(P * T, axis=1)
    den = np.linalg.norm(P, axis=1) * np.linalg.norm(T, axis=1)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _resolve_pairs(src: EmbeddingTable, tgt: EmbeddingTable, d: BilingualDictionary):
    pairs = [(s, t) for s, t in d.entries if s in src and t in tgt]
    skipped = len(d.entries) - len(pairs)
    X = np.array([src[s] for s, _ in pairs], dtype=np.float64).reshape(len(pairs), src.dimension)
    Y = np.array([tgt[t] for _, t in pairs], dtype=np.float64).reshape(len(pairs), tgt.dimension)
    return X, Y, skipped


def bli_task(
    src_table: EmbeddingTable,
    tgt_table: EmbeddingTable,
    dictionary: BilingualDictionary,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    train_size: Optional[int] = None,
    test_size: Optional[int] = None,
    test_dictionary: Optional[BilingualDictionary] = None,
) -> TaskResult:
    """Mean cosine between regressed and true target vectors on held-out pairs.

    With ``test_dictionary`` the split is fixed (train on ``dictionary``,
    test on ``test_dictionary``); otherwise each trial draws a random split
    of ``dictionary`` with ``test_size`` held-out pairs (default 20%).
    """
    X, Y, skipped = _resolve_pairs(src_table, tgt_table, dictionary)
    notes = {"direction": dictionary.direction, "skipped_pairs": skipped}
    if test_dictionary is not None:
        Xt, Yt, skipped_t = _resolve_pairs(src_table, tgt_table, test_dictionary)
        notes["skipped_test_pairs"] = skipped_t
        if len(Xt) < 10:
            raise TaskError(f"need at least 10 test pairs, found {len(Xt)}")
    else:
        n = len(X)
        n_test = int(round(0.2 * n)) if test_size is None else test_size
        n_train = n - n_test if train_size is None else train_size
        if n_test < 10:
            raise TaskError(f"need at least 10 test pairs, found {n_test}")
        if n_train < 1 or n_train + n_test > n:
            raise TaskError(f"split {n_train}/{n_test} does not fit {n} resolved pairs")
    if skipped:
        logger.warning("%d dictionary pairs skipped: word not in vocabulary", skipped)

    scores = []
    for trial in range(trials):
        if test_dictionary is not None:
            Xtr, Ytr, Xte, Yte = X, Y, Xt, Yt
        else:
            order = trial_rng(seed, trial).permutation(len(X))
            tr, te = order[:n_train], order[n_train:n_train + n_test]
            Xtr, Ytr, Xte, Yte = X[tr], Y[tr], X[te], Y[te]
        coef = fit_ols(Xtr, Ytr)
        scores.append(float(np.mean(_row_cosines(predict_ols(coef, Xte), Yte))))
    return TaskResult("bli", "mean-cosine-similarity", tuple(scores), notes)
