"""Regenerate the small synthetic fixtures in this directory.

The vectors are random Gaussian blobs (one per level-3 category) around
random centers of norm CENTER_NORM, so the fixtures exercise every CLI subcommand in a
second without any downloads. Run from anywhere::

    python3 fixtures/make_fixtures.py
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
DIM = 20
CENTER_NORM = 3.0

CATEGORIES = {
    ("Concrete Objects", "Living Things", "Animals"): "dog cat horse cow sheep goat",
    ("Concrete Objects", "Artifacts", "Hand Tools"): "hammer saw drill wrench pliers chisel",
    ("Concrete Objects", "Artifacts", "Manufactured Foods"): "bread cheese butter pasta soup cake",
    ("Concrete Objects", "Artifacts", "Vehicles"): "car truck bus train bicycle boat",
    ("Abstract Entities", "Emotions", "Emotions"): "joy anger fear pride shame grief",
    ("Abstract Entities", "Time Periods", "Time Periods"): "morning evening winter summer decade century",
}
# texts of each class draw from different categories, so mean vectors separate
POSITIVE = "dog cat horse bread cheese cake".split()
NEGATIVE = "hammer saw drill car truck bus".split()


def write_vec(path, words, X):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {X.shape[1]}\n")
        for w, v in zip(words, X):
            fh.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")


def language(rng, centers, noise):
    words, rows, vecs = [], [], []
    for (labels, members), center in zip(CATEGORIES.items(), centers):
        for w in members.split():
            words.append(w)
            rows.append((w, *labels))
            vecs.append(CENTER_NORM * (center + noise * rng.normal(size=DIM)))
    return words, rows, np.array(vecs)


def main():
    rng = np.random.default_rng(2021)
    centers = rng.normal(size=(len(CATEGORIES), DIM))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)

    runs = []
    for i, (lang, noise) in enumerate([("aa", 0.1), ("bb", 0.2), ("cc", 0.3), ("dd", 0.45), ("ee", 0.6)]):
        words, rows, X = language(np.random.default_rng(i), centers, noise)
        write_vec(HERE / f"{lang}.vec", words, X)
        runs.append({"model": ("ft", "m", "s")[i % 3], "language": lang, "vectors": f"{lang}.vec",
                     "lexicon": "lexicon.tsv", "tasks": {"wordsim": "wordsim.tsv", "sentiment": "sentiment.tsv"}})

    with open(HERE / "lexicon.tsv", "w", encoding="utf-8") as fh:
        fh.write("# word<TAB>level 1<TAB>level 2<TAB>level 3\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")

    # gold similarity from the category centers: 4 within a category, lower across
    category = {w: c for c, members in enumerate(CATEGORIES.values()) for w in members.split()}
    with open(HERE / "wordsim.tsv", "w", encoding="utf-8") as fh:
        for _ in range(60):
            a, b = rng.choice(words, size=2, replace=False)
            cos = float(centers[category[a]] @ centers[category[b]])
            fh.write(f"{a}\t{b}\t{2.0 * (1.0 + cos):.4f}\n")

    with open(HERE / "sentiment.tsv", "w", encoding="utf-8") as fh:
        for i in range(40):
            label = i % 2
            pool = POSITIVE if label else NEGATIVE
            text = " ".join(rng.choice(pool, size=3)) + "!"
            fh.write(f"{label}\t{text}\n")

    with open(HERE / "dictionary.tsv", "w", encoding="utf-8") as fh:
        for w in words:
            fh.write(f"{w}\t{w}\n")

    (HERE / "manifest.json").write_text(json.dumps(
        {"seed": 17, "trials": 5, "ks": [2, 3, 4], "levels": [1, 2, 3], "runs": runs}, indent=2) + "\n")


if __name__ == "__main__":
    main()
