"""Tokenization, vocabulary construction and corpus statistics."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

_WORD = re.compile(r"[a-z]+")
MIN_TOKEN_LEN = 3
DEFAULT_MAX_DF = 0.20


@dataclass
class TokenizedDoc:
    cik: int
    year: int
    tokens: list[str] = field(default_factory=list)


@dataclass
class Vocabulary:
    words: list[str]
    doc_freq: dict[str, int]
    total_docs: int

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index


@dataclass
class YearStats:
    year: int
    docs: int
    tokens: int
    types: int
    mean_tokens: float
    mean_types: float


@dataclass
class CorpusStats:
    years: list[YearStats]

    def rows(self):
        for y in self.years:
            yield (y.year, y.tokens, y.types, y.mean_tokens, y.mean_types)


def read_wordlist(path) -> frozenset[str]:
    """Load a one-word-per-line list; blank lines and ``#`` comments are skipped."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                words.add(line)
    return frozenset(words)


def default_lexicon() -> frozenset[str]:
    return read_wordlist(resources.files("proddiv") / "data" / "nouns.txt")


def default_stopwords() -> frozenset[str]:
    return read_wordlist(resources.files("proddiv") / "data" / "stopwords.txt")


def tokenize_and_clean(text, noun_lexicon, stopwords, cik=0, year=0) -> TokenizedDoc:
    """Lowercase, split on non-letters and keep nouns of three or more letters.

    Token order is preserved because PV-DM training depends on it.
    """
    if not noun_lexicon or not stopwords:
        raise ValueError("noun lexicon and stopword set must be non-empty")
    tokens = [
        t
        for t in _WORD.findall(text.lower())
        if len(t) >= MIN_TOKEN_LEN and t not in stopwords and t in noun_lexicon
    ]
    return TokenizedDoc(cik, year, tokens)


def document_frequencies(docs) -> Counter:
    df = Counter()
    for doc in docs:
        df.update(set(doc.tokens))
    return df


def build_vocabulary(docs, max_df: float = DEFAULT_MAX_DF) -> Vocabulary:
    """Keep words whose document frequency is strictly below ``max_df`` of the corpus."""
    docs = list(docs)
    if not docs:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if not 0 < max_df <= 1:
        raise ValueError(f"max_df must lie in (0, 1], got {max_df}")
    df = document_frequencies(docs)
    n = len(docs)
    kept = sorted(w for w, c in df.items() if c / n < max_df)
    return Vocabulary(kept, {w: df[w] for w in kept}, n)


def corpus_stats(docs_by_year) -> CorpusStats:
    """Pooled token/type totals per year plus per-document means."""
    out = []
    for year in sorted(docs_by_year):
        docs = list(docs_by_year[year])
        if not docs:
            raise ValueError(f"year {year} has no documents")
        pooled = Counter()
        for d in docs:
            pooled.update(d.tokens)
        out.append(
            YearStats(
                year=year,
                docs=len(docs),
                tokens=sum(pooled.values()),
                types=len(pooled),
                mean_tokens=sum(len(d.tokens) for d in docs) / len(docs),
                mean_types=sum(len(set(d.tokens)) for d in docs) / len(docs),
            )
        )
    return CorpusStats(out)


def save_vocabulary(vocab: Vocabulary, path, header_lines=()):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# total_docs={vocab.total_docs}\n")
        fh.write("word,doc_freq\n")
        for w in vocab.words:
            fh.write(f"{w},{vocab.doc_freq[w]}\n")


def load_vocabulary(path) -> Vocabulary:
    words, df, total = [], {}, None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# total_docs="):
                total = int(line.split("=", 1)[1])
            elif line.startswith("#") or line == "word,doc_freq" or not line:
                continue
            else:
                w, c = line.split(",")
                words.append(w)
                df[w] = int(c)
    if total is None:
        raise ValueError(f"{path}: missing total_docs header")
    return Vocabulary(words, df, total)
