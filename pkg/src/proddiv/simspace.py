"""Firm similarity matrices, per-year class profiles and heatmap export."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .embed import as_matrix

SYM_TOL = 1e-9


@dataclass
class SimilarityMatrix:
    labels: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.labels = [str(x) for x in self.labels]
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise ValueError(f"matrix shape {self.values.shape} does not match {n} labels")

    def __len__(self):
        return len(self.labels)

    def is_symmetric(self, tol=SYM_TOL) -> bool:
        return bool(np.allclose(self.values, self.values.T, atol=tol, rtol=0))

    def reorder(self, order) -> "SimilarityMatrix":
        order = list(order)
        return SimilarityMatrix([self.labels[i] for i in order], self.values[np.ix_(order, order)])

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([""] + self.labels)
            for label, row in zip(self.labels, self.values):
                w.writerow([label] + [repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "SimilarityMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
        labels = rows[0][1:]
        values = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        if [r[0] for r in rows[1:]] != labels:
            raise ValueError(f"{path}: row labels differ from column labels")
        return cls(labels, values)


@dataclass
class ClassProfile:
    year: int
    labels: list
    Z: np.ndarray
    a: np.ndarray

    @property
    def s(self) -> int:
        return len(self.labels)

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "labels": list(self.labels),
            "Z": self.Z.tolist(),
            "a": self.a.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "ClassProfile":
        return cls(int(d["year"]), list(d["labels"]), np.array(d["Z"], dtype=float), np.array(d["a"], dtype=float))


def cosine_matrix(vectors) -> SimilarityMatrix:
    """Pairwise dot products of unit vectors, labelled by CIK."""
    m = as_matrix(vectors)
    values = m.values @ m.values.T
    if sp.issparse(values):
        values = values.toarray()
    values = np.asarray(values, dtype=float)
    values = 0.5 * (values + values.T)
    np.fill_diagonal(values, np.clip(np.diag(values), -1.0, 1.0))
    return SimilarityMatrix([str(c) for c, _ in m.keys], np.clip(values, -1.0, 1.0))


def aggregate_classes(vectors, sic_map, year) -> ClassProfile:
    """Group firm vectors by class into centroid similarities and abundances.

    Each class is represented by its unit-normalized centroid; ``Z`` is the
    clamped cosine between class representatives and ``a`` the share of firms
    per class. Classes are ordered by label so input order never matters.
    """
    m = as_matrix(vectors)
    if len(m) == 0:
        raise ValueError("no firms to aggregate")
    members = defaultdict(list)
    for i, (cik, _) in enumerate(m.keys):
        if cik not in sic_map:
            raise KeyError(f"cik {cik} has no class assignment")
        members[sic_map[cik]].append(i)
    labels = sorted(members)
    dense = m.dense()
    reps = np.empty((len(labels), m.dim))
    for k, label in enumerate(labels):
        rows = sorted(members[label])
        centroid = dense[rows].sum(axis=0) / len(rows)
        norm = np.linalg.norm(centroid)
        if norm == 0:
            raise ValueError(f"class {label} has a zero centroid")
        reps[k] = centroid / norm
    Z = np.clip(reps @ reps.T, 0.0, 1.0)
    Z = 0.5 * (Z + Z.T)
    np.fill_diagonal(Z, 1.0)
    sizes = np.array([len(members[label]) for label in labels], dtype=float)
    return ClassProfile(year, labels, Z, sizes / sizes.sum())


def sic_profile(codes, tree, year) -> ClassProfile:
    """Class profile whose ``Z`` comes from SIC tree similarity between codes."""
    from .sicmodel import code_similarity

    counts = defaultdict(int)
    for c in codes:
        counts[c] += 1
    labels = sorted(counts)
    sizes = np.array([counts[c] for c in labels], dtype=float)
    return ClassProfile(year, labels, code_similarity(labels, tree), sizes / sizes.sum())


def heatmap_order(labels, metadata) -> list[int]:
    """Row order sorting firms by (SIC code, CIK); ``metadata`` maps label -> (sic, cik)."""
    missing = [lab for lab in labels if str(lab) not in metadata]
    if missing:
        raise KeyError(f"no metadata for firm(s) {missing[:5]}")
    return sorted(range(len(labels)), key=lambda i: tuple(metadata[str(labels[i])]))


def export_heatmap(matrix: SimilarityMatrix, metadata, path, header_lines=(), svg=True):
    """Write the (SIC code, CIK)-ordered matrix as CSV and, optionally, an SVG raster.

    Returns the reordered matrix.
    """
    meta = {str(k): v for k, v in metadata.items()}
    ordered = matrix.reorder(heatmap_order(matrix.labels, meta))
    path = Path(path)
    ordered.to_csv(path, header_lines)
    if svg:
        from .plotting import heatmap_svg

        heatmap_svg(ordered, path.with_suffix(".svg"), header_lines)
    return ordered
