"""Paragraph Vector, Distributed Memory (PV-DM) with negative sampling.

Each training step averages the document vector with the vectors of the
``window`` words preceding a position and predicts the word at that position.
All randomness (initialisation, document order, negative draws) comes from
one seeded NumPy generator on the host; the numba kernel itself is
deterministic, so a fixed seed and input give bitwise-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .embed import EmbeddingError, EmbeddingMatrix


class PvdmError(EmbeddingError):
    pass


@dataclass(frozen=True)
class PvdmParams:
    dim: int = 300
    window: int = 8
    epochs: int = 20
    rate: float = 0.025
    min_rate: float = 0.0001
    negative: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.negative < 1:
            raise ValueError(f"negative must be >= 1, got {self.negative}")

    def epoch_rate(self, epoch: int) -> float:
        """Learning rate for ``epoch`` (0-based), decaying linearly toward ``min_rate``."""
        return self.rate - (self.rate - self.min_rate) * epoch / self.epochs


@njit(cache=True)
def _softplus(x):
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def _run_epoch(tokens, offsets, order, doc_vecs, word_vecs, out_vecs, negatives, window, lr):
    dim = doc_vecs.shape[1]
    k = negatives.shape[1]
    h = np.empty(dim)
    grad = np.empty(dim)
    scale = 1.0 / (window + 1)
    loss = 0.0
    step = 0
    for oi in range(order.shape[0]):
        d = order[oi]
        for i in range(offsets[d] + window, offsets[d + 1]):
            for j in range(dim):
                h[j] = doc_vecs[d, j]
            for c in range(i - window, i):
                w = tokens[c]
                for j in range(dim):
                    h[j] += word_vecs[w, j]
            for j in range(dim):
                h[j] *= scale
                grad[j] = 0.0

            target = tokens[i]
            for s in range(k + 1):
                if s == 0:
                    w = target
                    label = 1.0
                else:
                    w = negatives[step, s - 1]
                    if w == target:
                        continue
                    label = 0.0
                f = 0.0
                for j in range(dim):
                    f += out_vecs[w, j] * h[j]
                if label == 1.0:
                    loss += _softplus(-f)
                else:
                    loss += _softplus(f)
                sig = 1.0 / (1.0 + math.exp(-f)) if f > -30.0 else 0.0
                g = (label - sig) * lr
                for j in range(dim):
                    grad[j] += g * out_vecs[w, j]
                    out_vecs[w, j] += g * h[j]

            # the full error goes to every averaged input, as in word2vec's CBOW-mean
            for j in range(dim):
                doc_vecs[d, j] += grad[j]
            for c in range(i - window, i):
                w = tokens[c]
                for j in range(dim):
                    word_vecs[w, j] += grad[j]
            step += 1
    return loss, step


class PvdmTrainer:
    """Owns all mutable training state for one PV-DM run.

    After :meth:`fit`, ``epoch_losses`` holds the mean loss per training
    position for every epoch and ``words``/``word_vecs`` the learned input
    word vectors.
    """

    def __init__(self, params: PvdmParams | None = None):
        self.params = params or PvdmParams()
        self.epoch_losses: list[float] = []
        self.words: list[str] = []
        self.word_vecs: np.ndarray | None = None

    def _encode(self, docs):
        p = self.params
        for doc in docs:
            if len(doc.tokens) < p.window + 1:
                raise PvdmError(
                    f"document cik={doc.cik} year={doc.year} has {len(doc.tokens)} tokens; "
                    f"PV-DM needs at least window + 1 = {p.window + 1}"
                )
        self.words = sorted({t for doc in docs for t in doc.tokens})
        index = {w: i for i, w in enumerate(self.words)}
        tokens = np.array([index[t] for doc in docs for t in doc.tokens], dtype=np.int32)
        offsets = np.zeros(len(docs) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(doc.tokens) for doc in docs])
        counts = np.bincount(tokens, minlength=len(self.words)).astype(float)
        return tokens, offsets, counts

    def fit(self, docs) -> EmbeddingMatrix:
        docs = list(docs)
        if not docs:
            raise PvdmError("empty corpus")
        p = self.params
        tokens, offsets, counts = self._encode(docs)
        n_docs, n_words = len(docs), len(self.words)
        positions = int(offsets[-1]) - n_docs * p.window

        rng = np.random.Generator(np.random.PCG64(p.seed))
        doc_vecs = (rng.random((n_docs, p.dim)) - 0.5) / p.dim
        word_vecs = (rng.random((n_words, p.dim)) - 0.5) / p.dim
        out_vecs = np.zeros((n_words, p.dim))
        noise = counts ** 0.75
        noise /= noise.sum()
        cdf = np.cumsum(noise)
        cdf[-1] = 1.0

        self.epoch_losses = []
        for epoch in range(p.epochs):
            order = rng.permutation(n_docs).astype(np.int64)
            negatives = np.searchsorted(cdf, rng.random((positions, p.negative)), side="right")
            negatives = np.minimum(negatives, n_words - 1).astype(np.int32)
            loss, steps = _run_epoch(
                tokens, offsets, order, doc_vecs, word_vecs, out_vecs,
                negatives, p.window, p.epoch_rate(epoch),
            )
            mean_loss = loss / max(steps, 1)
            if not math.isfinite(mean_loss) or not np.isfinite(doc_vecs).all():
                raise PvdmError(f"training diverged at epoch {epoch + 1}: loss={mean_loss}")
            self.epoch_losses.append(mean_loss)

        self.word_vecs = word_vecs
        norms = np.linalg.norm(doc_vecs, axis=1)
        bad = np.flatnonzero(norms == 0)
        if bad.size:
            d = docs[bad[0]]
            raise PvdmError(f"zero document vector for cik={d.cik} year={d.year}")
        keys = [(d.cik, d.year) for d in docs]
        return EmbeddingMatrix("pvdm", keys, doc_vecs / norms[:, None])


def train_pvdm(docs, params: PvdmParams | None = None) -> EmbeddingMatrix:
    return PvdmTrainer(params).fit(docs)
