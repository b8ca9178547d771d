"""Category-labeled word sets with three levels of granularity.

A lexicon file is UTF-8 TSV with one row per word::

    chair<TAB>Concrete Objects<TAB>Artifacts<TAB>Furniture

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from os import PathLike
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import LexiconFormatError

LEVELS = (1, 2, 3)
MODES = ("generic", "binder-strict")


@lru_cache(maxsize=1)
def binder_catalog() -> dict[int, tuple[str, ...]]:
    """Canonical Binder category labels per level, in catalog order."""
    catalog: dict[int, list[str]] = {level: [] for level in LEVELS}
    text = resources.files("catmod").joinpath("data/binder_categories.tsv").read_text("utf-8")
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        level, label = line.split("\t")
        catalog[int(level)].append(label)
    return {level: tuple(labels) for level, labels in catalog.items()}


@dataclass(frozen=True)
class CategoryAssignment:
    """Maps every word index to a category index.

    ``level`` is 1, 2, 3 for lexicon levels or ``"custom"`` for assignments
    derived from detected communities.
    """

    level: Union[int, str]
    category_of: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        cats = np.array(self.category_of, dtype=np.int64)
        if cats.ndim != 1:
            raise ValueError("category_of must be one-dimensional")
        if cats.size and (cats.min() < 0 or cats.max() >= len(self.labels)):
            raise ValueError("category index out of range")
        cats.setflags(write=False)
        object.__setattr__(self, "category_of", cats)

    @property
    def num_categories(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return int(self.category_of.size)

    def members(self, category: int) -> np.ndarray:
        return np.flatnonzero(self.category_of == category)


@dataclass(frozen=True)
class CategoryLexicon:
    words: tuple[str, ...]
    labels: tuple[tuple[str, str, str], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.words) != len(self.labels):
            raise ValueError("words and labels differ in length")
        index = {}
        for i, word in enumerate(self.words):
            if word in index:
                raise LexiconFormatError(f"duplicate word {word!r}")
            index[word] = i
        for row in self.labels:
            if len(row) != 3:
                raise ValueError("each word needs exactly three labels")
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[str]]) -> "CategoryLexicon":
        words, labels = [], []
        for row in rows:
            word, l1, l2, l3 = row
            words.append(unicodedata.normalize("NFC", word))
            labels.append((l1, l2, l3))
        return cls(tuple(words), tuple(labels))

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> int:
        return self._index[word]

    def labels_at(self, level: int) -> tuple[str, ...]:
        _check_level(level)
        return tuple(row[level - 1] for row in self.labels)

    def level_catalog(self, level: int) -> tuple[str, ...]:
        """Distinct labels at ``level`` in first-appearance order."""
        return tuple(dict.fromkeys(self.labels_at(level)))

    @property
    def level_catalogs(self) -> dict[int, tuple[str, ...]]:
        return {level: self.level_catalog(level) for level in LEVELS}

    def subset(self, words: Iterable[str]) -> "CategoryLexicon":
        """Restrict to ``words``, keeping this lexicon's row order."""
        keep = set(words)
        rows = [(w, lab) for w, lab in zip(self.words, self.labels) if w in keep]
        return CategoryLexicon(tuple(w for w, _ in rows), tuple(lab for _, lab in rows))

    def validate_binder(self) -> None:
        catalog = binder_catalog()
        for word, row in zip(self.words, self.labels):
            for level, label in zip(LEVELS, row):
                if label not in catalog[level]:
                    raise LexiconFormatError(
                        f"word {word!r}: level-{level} label {label!r} is not a Binder category"
                    )


def _check_level(level: int) -> None:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")


def load_lexicon(path: Union[str, PathLike], mode: str = "generic") -> CategoryLexicon:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rows = []
    seen: dict[str, int] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 4:
                    raise LexiconFormatError(
                        f"{path}: row {lineno} has {len(fields)} fields, expected 4"
                    )
                fields = [f.strip() for f in fields]
                word = unicodedata.normalize("NFC", fields[0])
                if not word or not all(fields[1:]):
                    raise LexiconFormatError(f"{path}: row {lineno} has an empty field")
                if word in seen:
                    raise LexiconFormatError(
                        f"{path}: row {lineno} repeats word {word!r} (first at row {seen[word]})"
                    )
                seen[word] = lineno
                rows.append((word, *fields[1:]))
    except FileNotFoundError as exc:
        raise LexiconFormatError(f"lexicon file not found: {path}") from exc
    except UnicodeDecodeError as exc:
        raise LexiconFormatError(f"{path}: not valid UTF-8 ({exc.reason})") from exc
    if not rows:
        raise LexiconFormatError(f"{path}: lexicon is empty")
    lex = CategoryLexicon.from_rows(rows)
    if mode == "binder-strict":
        lex.validate_binder()
    return lex


def write_lexicon(lex: CategoryLexicon, path: Union[str, PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word, row in zip(lex.words, lex.labels):
            fh.write("\t".join((word, *row)) + "\n")


def assignment_at_level(lex: CategoryLexicon, level: int) -> CategoryAssignment:
    """Category indices follow first appearance of each label in word order."""
    labels = lex.labels_at(level)
    catalog = lex.level_catalog(level)
    position = {label: i for i, label in enumerate(catalog)}
    return CategoryAssignment(level, np.array([position[lab] for lab in labels], dtype=np.int64), catalog)
