"""Diversity and specificity measures over class abundances and firm vectors."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .embed import as_matrix


class DiversityError(ValueError):
    pass


@dataclass(frozen=True)
class DiversityValue:
    metric: str
    q: float | None
    year: int
    value: float

    def row(self):
        q = "" if self.q is None else f"{self.q:g}"
        return (self.metric, q, self.year, repr(float(self.value)))


def _counts(counts) -> np.ndarray:
    if isinstance(counts, dict):
        counts = list(counts.values())
    arr = np.asarray(counts, dtype=float)
    if arr.ndim != 1 or (arr < 0).any():
        raise DiversityError("counts must be a 1-D vector of nonnegative numbers")
    if not (arr > 0).any():
        raise DiversityError("counts need at least one positive entry")
    return arr


def class_counts(labels) -> dict:
    """Firm counts per class label, ordered by label."""
    c = Counter(labels)
    return {k: c[k] for k in sorted(c)}


def richness(counts) -> int:
    return int((_counts(counts) > 0).sum())


def shannon_entropy(counts) -> float:
    """Natural-log Shannon entropy of the count proportions."""
    arr = _counts(counts)
    p = arr[arr > 0] / arr.sum()
    return max(0.0, -math.fsum(p * np.log(p)))


def normalized_entropy(counts) -> float:
    """Shannon entropy divided by the log of the number of instantiated classes."""
    k = richness(counts)
    if k < 2:
        raise DiversityError("evenness is undefined with a single instantiated class")
    return shannon_entropy(counts) / math.log(k)


def similarity_diversity(a, Z, q: float) -> float:
    """Similarity-sensitive diversity of order ``q`` for abundances ``a`` and similarity ``Z``.

    ``q == 1`` uses the limit ``exp(-sum a_i log (Za)_i)``.
    """
    a = np.asarray(a, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if q < 0:
        raise DiversityError(f"q must be nonnegative, got {q}")
    if Z.shape != (a.size, a.size):
        raise DiversityError(f"Z has shape {Z.shape}, expected {(a.size, a.size)}")
    za = Z @ a
    support = a > 0
    if (za[support] <= 0).any():
        raise DiversityError("similarity matrix row is degenerate: (Za)_i = 0 for an abundant class")
    a, za = a[support], za[support]
    if q == 1:
        return math.exp(-math.fsum(a * np.log(za)))
    return math.fsum(a * za ** (q - 1.0)) ** (1.0 / (1.0 - q))


def q_diversity(profile, q: float) -> float:
    return similarity_diversity(profile.a, profile.Z, q)


def adjusted_q_diversity(profile, q: float) -> float:
    """``q_diversity`` divided by the number of classes, its maximum."""
    return q_diversity(profile, q) / len(profile.a)


def _data_matrix(vectors):
    if isinstance(vectors, np.ndarray):
        return vectors.astype(float)
    if sp.issparse(vectors):
        return vectors.tocsr().astype(float)
    return as_matrix(vectors).values


def explained_variance(vectors) -> np.ndarray:
    """Eigenvalues of the mean-centered covariance, descending (nonzero part only).

    When there are fewer vectors than dimensions the centered Gram matrix is
    decomposed instead; it has the same nonzero spectrum.
    """
    X = _data_matrix(vectors)
    n, d = X.shape
    if n < 2:
        raise DiversityError("PCA diversity needs at least 2 vectors")
    if n <= d:
        G = X @ X.T
        G = G.toarray() if sp.issparse(G) else np.asarray(G)
        row = G.mean(axis=0)
        Gc = G - row[None, :] - row[:, None] + G.mean()
        ev = np.linalg.eigvalsh(0.5 * (Gc + Gc.T))
    else:
        Xd = X.toarray() if sp.issparse(X) else X
        Xc = Xd - Xd.mean(axis=0)
        ev = np.linalg.eigvalsh(Xc.T @ Xc)
    ev = np.clip(ev[::-1], 0.0, None) / (n - 1)
    return ev


def pca_diversity(vectors, threshold: float = 0.9) -> int:
    """Smallest number of principal components reaching ``threshold`` of the variance."""
    if not 0 < threshold <= 1:
        raise DiversityError(f"threshold must lie in (0, 1], got {threshold}")
    X = _data_matrix(vectors)
    ev = explained_variance(X)
    sq = X.multiply(X).sum() if sp.issparse(X) else (X * X).sum()
    scale = max(float(sq) / X.shape[0], np.finfo(float).tiny)
    total = ev.sum()
    if total <= 1e-12 * scale:
        return 0
    cum = np.cumsum(ev)
    return int(np.searchsorted(cum, threshold * total * (1 - 1e-12)) + 1)


def _class_index(labels, classes):
    if isinstance(classes, dict):
        try:
            assigned = [classes[lab] for lab in labels]
        except KeyError as e:
            raise DiversityError(f"firm {e.args[0]} has no class") from None
    else:
        assigned = list(classes)
        if len(assigned) != len(labels):
            raise DiversityError("one class per firm is required")
    groups: dict = {}
    for i, c in enumerate(assigned):
        groups.setdefault(c, []).append(i)
    return groups


def specificity_parts(matrix, classes) -> tuple[float, float]:
    """Class-averaged mean within-class and between-class similarity.

    Within-class means skip classes with a single firm. Between-class means
    divide by the number of cross-class pairs actually summed.
    """
    M = np.asarray(matrix.values, dtype=float)
    groups = _class_index(matrix.labels, classes)
    if len(groups) < 2:
        raise DiversityError("industry specificity needs at least two classes")
    n = M.shape[0]
    # shift by a reference entry so constant matrices average back exactly
    ref = M[0, 1] if n > 1 else 0.0
    D = M - ref
    within, between = [], []
    for key in sorted(groups, key=repr):
        idx = np.array(groups[key])
        mask = np.ones(n, dtype=bool)
        mask[idx] = False
        out = np.flatnonzero(mask)
        between.append(D[np.ix_(idx, out)].sum() / (idx.size * out.size))
        if idx.size >= 2:
            block = D[np.ix_(idx, idx)]
            off = ~np.eye(idx.size, dtype=bool)
            within.append(block[off].sum() / (idx.size * (idx.size - 1)))
    if not within:
        raise DiversityError("industry specificity needs a class with at least two firms")
    w = ref + math.fsum(within) / len(within)
    b = ref + math.fsum(between) / len(between)
    return float(w), float(b)


def industry_specificity(matrix, classes) -> float:
    """Mean within-class over mean between-class firm similarity."""
    w, b = specificity_parts(matrix, classes)
    if b == 0:
        raise DiversityError("mean between-class similarity is zero")
    return w / b

