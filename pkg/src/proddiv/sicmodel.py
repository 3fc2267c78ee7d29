"""Four-level SIC hierarchy and the tree-walk firm similarity baseline."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simspace import SimilarityMatrix

LEVELS = ("division", "major_group", "industry_group", "code")

# Standard SIC divisions by major-group (2-digit) range.
DIVISIONS = (
    ("A", 1, 9),
    ("B", 10, 14),
    ("C", 15, 17),
    ("D", 20, 39),
    ("E", 40, 49),
    ("F", 50, 51),
    ("G", 52, 59),
    ("H", 60, 67),
    ("I", 70, 89),
    ("J", 91, 99),
)


class SicError(KeyError):
    def __str__(self):
        return str(self.args[0])


def division_of(code: int) -> str:
    major = code // 100
    for name, lo, hi in DIVISIONS:
        if lo <= major <= hi:
            return name
    return "Z"  # nonclassifiable establishments


@dataclass(frozen=True)
class TreeSummary:
    divisions: int
    major_groups: int
    industry_groups: int
    codes: int

    def as_tuple(self):
        return (self.divisions, self.major_groups, self.industry_groups, self.codes)


class SicTree:
    """Leaves are 4-digit codes; every code has a single chain of ancestors.

    Node identities are path-qualified, so an industry group label reused under
    two major groups still yields two distinct nodes.
    """

    def __init__(self, rows):
        self.parents: dict[int, tuple] = {}
        children = defaultdict(set)
        for code, ig, mg, div in rows:
            code = int(code)
            chain = ((str(div),), (str(div), str(mg)), (str(div), str(mg), str(ig)))
            if code in self.parents and self.parents[code] != chain:
                raise ValueError(f"SIC code {code} listed with two different parent chains")
            self.parents[code] = chain
            children[()].add(chain[0])
            children[chain[0]].add(chain[1])
            children[chain[1]].add(chain[2])
            children[chain[2]].add(code)
        if not self.parents:
            raise ValueError("SIC tree has no codes")
        self.children = {k: frozenset(v) for k, v in children.items()}
        self.leaf_count: dict = {}
        for code, chain in self.parents.items():
            self.leaf_count[code] = 1
            for node in ((),) + chain:
                self.leaf_count[node] = self.leaf_count.get(node, 0) + 1

    @classmethod
    def from_csv(cls, path) -> "SicTree":
        """Load ``code,industry_group,major_group,division`` rows."""
        with open(Path(path), newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
            rows = [(r["code"], r["industry_group"], r["major_group"], r["division"]) for r in reader]
        return cls(rows)

    @classmethod
    def from_codes(cls, codes) -> "SicTree":
        """Derive the tree from code digits and the standard division ranges."""
        return cls((c, int(c) // 10, int(c) // 100, division_of(int(c))) for c in sorted(set(map(int, codes))))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["code", "industry_group", "major_group", "division"])
            for code in sorted(self.parents):
                div, mg, ig = (node[-1] for node in self.parents[code])
                w.writerow([code, ig, mg, div])

    @property
    def codes(self) -> list[int]:
        return sorted(self.parents)

    @property
    def total_leaves(self) -> int:
        return self.leaf_count[()]

    def __contains__(self, code) -> bool:
        return code in self.parents

    def ancestors(self, code) -> tuple:
        """Nodes from the root down to ``code`` itself."""
        try:
            return ((),) + self.parents[code] + (code,)
        except KeyError:
            raise SicError(f"unknown SIC code {code}") from None

    def lca(self, a, b):
        last = ()
        for x, y in zip(self.ancestors(a), self.ancestors(b)):
            if x != y:
                break
            last = x
        return last

    def distance(self, a, b) -> int:
        return self.leaf_count[self.lca(a, b)]


def tree_summary(tree: SicTree) -> TreeSummary:
    counts = [0, 0, 0]
    for node in tree.leaf_count:
        if isinstance(node, tuple) and node:
            counts[len(node) - 1] += 1
    return TreeSummary(counts[0], counts[1], counts[2], len(tree.parents))


def sic_distance(code_i, code_j, tree: SicTree) -> int:
    """Leaf count under the highest node of the shortest walk between two codes."""
    return tree.distance(code_i, code_j)


def distance_to_similarity(d, total_leaves: int):
    """Affine map: distance 1 gives similarity 1, the full tree gives 0."""
    if total_leaves <= 1:
        return np.ones_like(np.asarray(d, dtype=float))
    return 1.0 - (np.asarray(d, dtype=float) - 1.0) / (total_leaves - 1.0)


def code_similarity(codes, tree: SicTree) -> np.ndarray:
    codes = list(codes)
    n = len(codes)
    dist = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = tree.distance(codes[i], codes[j])
    return distance_to_similarity(dist, tree.total_leaves)


def sic_similarity_matrix(firms, tree: SicTree) -> SimilarityMatrix:
    """Firm-by-firm similarity from SIC tree distance; ``firms`` is ``[(cik, code), ...]``."""
    firms = list(firms)
    codes = [c for _, c in firms]
    for c in codes:
        if c not in tree:
            raise SicError(f"unknown SIC code {c}")
    uniq = sorted(set(codes))
    pos = {c: i for i, c in enumerate(uniq)}
    block = code_similarity(uniq, tree)
    idx = np.array([pos[c] for c in codes], dtype=int)
    values = block[np.ix_(idx, idx)]
    return SimilarityMatrix([str(cik) for cik, _ in firms], values)
