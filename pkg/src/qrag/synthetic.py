"""Synthetic Gurmukhi-like corpora for demos, tests, and benchmarks.

Words are random consonant/vowel-sign syllable strings drawn from the
Gurmukhi block with a Zipf-shaped frequency profile, so BPE training, IDF
weighting, and retrieval behave like they do on natural text. The planted
benchmark additionally hides a unique marker word in each lexical target and
derives semantic queries as word subsamples of their targets.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

_CONSONANTS = [
    chr(cp)
    for cp in range(0x0A05, 0x0A3A)
    if unicodedata.category(chr(cp)) == "Lo"
]
_VOWEL_SIGNS = [
    chr(cp)
    for cp in range(0x0A3E, 0x0A4D)
    if unicodedata.category(chr(cp)) in ("Mn", "Mc")
]


def _word(rng: np.random.Generator, min_syllables: int, max_syllables: int) -> str:
    n = int(rng.integers(min_syllables, max_syllables + 1))
    parts = []
    for _ in range(n):
        parts.append(_CONSONANTS[int(rng.integers(len(_CONSONANTS)))])
        if rng.random() < 0.6:
            parts.append(_VOWEL_SIGNS[int(rng.integers(len(_VOWEL_SIGNS)))])
    return "".join(parts)


def gurmukhi_lexicon(
    rng: np.random.Generator,
    n_words: int,
    min_syllables: int = 2,
    max_syllables: int = 4,
) -> list[str]:
    """Distinct random words, Zipf-ranked by the caller's sampling."""
    seen: set[str] = set()
    words: list[str] = []
    while len(words) < n_words:
        w = _word(rng, min_syllables, max_syllables)
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _zipf_probs(n: int) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    p = 1.0 / ranks
    return p / p.sum()


def make_corpus(
    n_docs: int,
    seed: int = 0,
    lexicon_size: int = 800,
    words_per_doc: tuple[int, int] = (40, 70),
) -> list[dict]:
    """JSONL-ready document records over a Zipf-sampled lexicon."""
    rng = np.random.default_rng(seed)
    lexicon = gurmukhi_lexicon(rng, lexicon_size)
    probs = _zipf_probs(lexicon_size)
    lo, hi = words_per_doc
    records = []
    for i in range(n_docs):
        length = int(rng.integers(lo, hi + 1))
        idx = rng.choice(lexicon_size, size=length, p=probs)
        records.append(
            {
                "id": f"doc{i:05d}",
                "text": " ".join(lexicon[j] for j in idx),
                "source": "synthetic",
            }
        )
    return records


@dataclass
class PlantedBenchmark:
    """A corpus with known-answer queries.

    Lexical queries contain a marker word that occurs only in their target
    document; semantic queries are shuffled word subsamples of theirs.
    ``targets`` maps qid -> target doc id.
    """

    records: list[dict]
    queries: list[dict] = field(default_factory=list)
    targets: dict[str, str] = field(default_factory=dict)


def make_planted_benchmark(
    n_docs: int = 1000,
    n_lexical: int = 50,
    n_semantic: int = 50,
    seed: int = 7,
    lexicon_size: int = 700,
    words_per_doc: tuple[int, int] = (40, 65),
) -> PlantedBenchmark:
    if n_lexical + n_semantic > n_docs:
        raise ValueError("need at least one target doc per query")
    rng = np.random.default_rng(seed)
    lexicon = gurmukhi_lexicon(rng, lexicon_size)
    base = set(lexicon)
    probs = _zipf_probs(lexicon_size)
    lo, hi = words_per_doc

    docs: list[list[str]] = []
    for _ in range(n_docs):
        length = int(rng.integers(lo, hi + 1))
        idx = rng.choice(lexicon_size, size=length, p=probs)
        docs.append([lexicon[j] for j in idx])

    bench = PlantedBenchmark(records=[])
    for i in range(n_lexical):
        while True:
            marker = _word(rng, 4, 5)
            if marker not in base:
                base.add(marker)
                break
        # Three occurrences guarantee the marker's merges reach the pair
        # frequency threshold and it survives BPE as a single rare token.
        for _ in range(3):
            docs[i].insert(int(rng.integers(len(docs[i]) + 1)), marker)
        support = [docs[i][j] for j in rng.choice(len(docs[i]), size=3, replace=False)]
        qid = f"lex{i:03d}"
        bench.queries.append(
            {"qid": qid, "text": " ".join([marker] + support), "kind": "lexical"}
        )
        bench.targets[qid] = f"doc{i:05d}"

    for j in range(n_semantic):
        t = n_lexical + j
        words = docs[t]
        take = max(5, int(0.6 * len(words)))
        picked = [words[i] for i in rng.choice(len(words), size=take, replace=False)]
        qid = f"sem{j:03d}"
        bench.queries.append({"qid": qid, "text": " ".join(picked), "kind": "semantic"})
        bench.targets[qid] = f"doc{t:05d}"

    bench.records = [
        {"id": f"doc{i:05d}", "text": " ".join(words), "source": "synthetic"}
        for i, words in enumerate(docs)
    ]
    return bench


def write_jsonl(records: Sequence[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
