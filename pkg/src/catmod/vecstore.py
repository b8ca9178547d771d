"""Loading word vectors in word2vec text format and binding them to a lexicon."""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .errors import ResolveError, VectorFormatError
from .lexicon import CategoryLexicon

logger = logging.getLogger(__name__)

POLICIES = ("fail", "skip-missing")


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    entries: Mapping[str, np.ndarray]
    source_label: str = ""
    duplicates: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        for word, vec in self.entries.items():
            if vec.shape != (self.dimension,):
                raise ValueError(f"vector for {word!r} has shape {vec.shape}, expected ({self.dimension},)")

    @classmethod
    def from_dict(cls, entries: Mapping[str, Iterable[float]], source_label: str = "",
                  dtype=np.float64) -> "EmbeddingTable":
        converted = {}
        for word, vec in entries.items():
            arr = np.array(vec, dtype=dtype)
            arr.setflags(write=False)
            converted[unicodedata.normalize("NFC", word)] = arr
        if not converted:
            raise ValueError("empty embedding table")
        dim = len(next(iter(converted.values())))
        return cls(dim, converted, source_label)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __getitem__(self, word: str) -> np.ndarray:
        return self.entries[word]

    def get(self, word: str) -> Optional[np.ndarray]:
        return self.entries.get(word)


@dataclass(frozen=True)
class ResolvedWordSet:
    """Lexicon words that have vectors, in lexicon order.

    ``lexicon`` is the input lexicon restricted to ``words``, so category
    counts downstream never include dropped words.
    """

    words: tuple[str, ...]
    vectors: np.ndarray
    missing: tuple[str, ...]
    lexicon: Optional[CategoryLexicon] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.words)


def load_word2vec_text(
    path: Union[str, PathLike],
    limit: Optional[int] = None,
    keep: Optional[Iterable[str]] = None,
    dtype=np.float32,
    source_label: Optional[str] = None,
) -> EmbeddingTable:
    """Stream a word2vec text file into an :class:`EmbeddingTable`.

    Reads at most ``limit`` vector lines. When ``keep`` is given only those
    words are retained, which keeps memory small when a lexicon of a few
    hundred words is looked up in a file with a million rows.

    Duplicate words keep their first vector; the number of dropped
    duplicates is stored on the table and logged.
    """
    if limit is not None and limit < 0:
        raise ValueError("limit must be non-negative")
    wanted = None if keep is None else {unicodedata.normalize("NFC", w) for w in keep}
    entries: dict[str, np.ndarray] = {}
    duplicates = 0
    try:
        fh = open(path, encoding="utf-8", newline="\n")
    except FileNotFoundError as exc:
        raise VectorFormatError(f"vector file not found: {path}") from exc
    with fh:
        try:
            header = fh.readline()
            parts = header.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise VectorFormatError(f"{path}: line 1: malformed header {header.strip()!r}, expected '<count> <dim>'")
            count, dim = int(parts[0]), int(parts[1])
            if dim < 1:
                raise VectorFormatError(f"{path}: line 1: dimension must be positive")
            to_read = count if limit is None else min(count, limit)
            for i in range(to_read):
                lineno = i + 2
                line = fh.readline()
                if not line:
                    raise VectorFormatError(f"{path}: line {lineno}: file ends after {i} of {count} vectors")
                fields = line.rstrip("\r\n ").split(" ")
                if len(fields) - 1 != dim:
                    raise VectorFormatError(
                        f"{path}: line {lineno}: expected {dim} floats, found {len(fields) - 1}"
                    )
                word = unicodedata.normalize("NFC", fields[0])
                if word in entries:
                    duplicates += 1
                    continue
                if wanted is not None and word not in wanted:
                    continue
                try:
                    vec = np.array(fields[1:], dtype=np.float64).astype(dtype)
                except ValueError as exc:
                    raise VectorFormatError(f"{path}: line {lineno}: {exc}") from exc
                vec.setflags(write=False)
                entries[word] = vec
        except UnicodeDecodeError as exc:
            raise VectorFormatError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc
    if duplicates:
        logger.warning("%s: %d duplicate words ignored (first occurrence kept)", path, duplicates)
    return EmbeddingTable(dim, entries, source_label if source_label is not None else str(path), duplicates)


def _format_float(x: float) -> str:
    return repr(float(x))


def write_word2vec_text(table: EmbeddingTable, path: Union[str, PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table.entries)} {table.dimension}\n")
        for word, vec in table.entries.items():
            fh.write(word + " " + " ".join(_format_float(x) for x in vec) + "\n")


def resolve(table: EmbeddingTable, lexicon: CategoryLexicon, policy: str = "fail") -> ResolvedWordSet:
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    if len(lexicon) == 0:
        raise ResolveError("lexicon is empty")
    present = [w for w in lexicon.words if w in table.entries]
    missing = tuple(w for w in lexicon.words if w not in table.entries)
    if missing and policy == "fail":
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        raise ResolveError(f"{len(missing)} lexicon words have no vector: {shown}")
    if len(present) < 2:
        raise ResolveError(f"only {len(present)} lexicon words have vectors; need at least 2")
    if missing:
        logger.warning("%d lexicon words missing from %s; skipped", len(missing), table.source_label)
    vectors = np.array([table.entries[w] for w in present], dtype=np.float64)
    vectors.setflags(write=False)
    sub = lexicon.subset(present) if missing else lexicon
    return ResolvedWordSet(tuple(present), vectors, missing, sub)
