"""Unit-length firm vectors: Boolean and TF-IDF bag-of-words models, plus storage.

PV-DM training lives in :mod:`proddiv.pvdm`; it returns the same
:class:`EmbeddingMatrix` container.
"""

from __future__ import annotations

import csv
import json
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

MODEL_TAGS = ("boolean", "tfidf", "pvdm")
NORM_TOL = 1e-9


class EmbeddingError(ValueError):
    pass


@dataclass
class FirmVector:
    cik: int
    year: int
    model_tag: str
    values: np.ndarray | sp.csr_matrix  # 1-D dense, or a 1 x d sparse row

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    def dense(self) -> np.ndarray:
        if sp.issparse(self.values):
            return self.values.toarray().ravel()
        return np.asarray(self.values, dtype=float)


class EmbeddingMatrix:
    """Row-stacked firm vectors of one model, with ``(cik, year)`` keys.

    Behaves as a read-only sequence of :class:`FirmVector`.
    """

    def __init__(self, model_tag, keys, values):
        keys = [(int(c), int(y)) for c, y in keys]
        if values.shape[0] != len(keys):
            raise ValueError(f"{len(keys)} keys for {values.shape[0]} rows")
        self.model_tag = model_tag
        self.keys = keys
        self.values = values.tocsr() if sp.issparse(values) else np.ascontiguousarray(values, dtype=float)

    @classmethod
    def from_vectors(cls, vectors):
        vectors = list(vectors)
        if not vectors:
            raise ValueError("no vectors")
        dims = {v.dim for v in vectors}
        if len(dims) != 1:
            raise ValueError(f"vectors have mixed dimensions {sorted(dims)}")
        tag = vectors[0].model_tag
        keys = [(v.cik, v.year) for v in vectors]
        if any(sp.issparse(v.values) for v in vectors):
            values = sp.vstack([sp.csr_matrix(v.values) for v in vectors]).tocsr()
        else:
            values = np.vstack([np.asarray(v.values, dtype=float) for v in vectors])
        return cls(tag, keys, values)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return len(self.keys)

    def __getitem__(self, i) -> FirmVector:
        cik, year = self.keys[i]
        row = self.values[i] if self.is_sparse else self.values[i].copy()
        return FirmVector(cik, year, self.model_tag, row)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def years(self) -> list[int]:
        return sorted({y for _, y in self.keys})

    def select(self, rows) -> "EmbeddingMatrix":
        rows = list(rows)
        return EmbeddingMatrix(self.model_tag, [self.keys[i] for i in rows], self.values[rows])

    def for_year(self, year: int) -> "EmbeddingMatrix":
        return self.select(i for i, (_, y) in enumerate(self.keys) if y == year)

    def dense(self) -> np.ndarray:
        return self.values.toarray() if self.is_sparse else self.values

    def norms(self) -> np.ndarray:
        if self.is_sparse:
            return np.sqrt(np.asarray(self.values.multiply(self.values).sum(axis=1)).ravel())
        return np.linalg.norm(self.values, axis=1)


def as_matrix(vectors) -> EmbeddingMatrix:
    if isinstance(vectors, EmbeddingMatrix):
        return vectors
    return EmbeddingMatrix.from_vectors(vectors)


def _normalize_rows(mat: sp.csr_matrix, keys) -> sp.csr_matrix:
    norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
    for i, n in enumerate(norms):
        if n == 0:
            cik, year = keys[i]
            raise EmbeddingError(f"zero vector for cik={cik} year={year}: no weighted vocabulary words")
    return sp.diags(1.0 / norms) @ mat


def _count_matrix(docs, vocab, binary: bool) -> sp.csr_matrix:
    indptr, indices, data = [0], [], []
    for doc in docs:
        counts = Counter(t for t in doc.tokens if t in vocab.index)
        cols = sorted(vocab.index[w] for w in counts)
        indices.extend(cols)
        data.extend(1.0 if binary else float(counts[vocab.words[c]]) for c in cols)
        indptr.append(len(indices))
    shape = (len(indptr) - 1, len(vocab))
    return sp.csr_matrix(
        (np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=shape,
    )


def embed_boolean_corpus(docs, vocab) -> EmbeddingMatrix:
    """Boolean presence vectors for every document, each scaled to unit length."""
    docs = list(docs)
    if len(vocab) == 0:
        raise EmbeddingError("vocabulary is empty")
    keys = [(d.cik, d.year) for d in docs]
    mat = _normalize_rows(_count_matrix(docs, vocab, binary=True), keys)
    return EmbeddingMatrix("boolean", keys, mat)


def embed_boolean(doc, vocab) -> FirmVector:
    return embed_boolean_corpus([doc], vocab)[0]


def inverse_document_frequency(docs, vocab) -> np.ndarray:
    """Natural-log idf of each vocabulary word over ``docs``; 0 for absent words."""
    docs = list(docs)
    df = np.zeros(len(vocab))
    for doc in docs:
        for w in set(doc.tokens):
            j = vocab.index.get(w)
            if j is not None:
                df[j] += 1
    idf = np.zeros(len(vocab))
    present = df > 0
    idf[present] = np.log(len(docs) / df[present])
    return idf


def embed_tfidf(docs, vocab) -> EmbeddingMatrix:
    """Raw count times log(|F| / docs containing the word), then unit-normalized.

    ``docs`` is the whole corpus F; it supplies both the vectors and the idf.
    """
    docs = list(docs)
    if not docs:
        raise EmbeddingError("empty corpus")
    if len(vocab) == 0:
        raise EmbeddingError("vocabulary is empty")
    keys = [(d.cik, d.year) for d in docs]
    counts = _count_matrix(docs, vocab, binary=False)
    weighted = (counts @ sp.diags(inverse_document_frequency(docs, vocab))).tocsr()
    weighted.eliminate_zeros()
    return EmbeddingMatrix("tfidf", keys, _normalize_rows(weighted, keys))


# --- storage -----------------------------------------------------------------

_MAGIC = b"PDVEC01\n"
_HEAD = struct.Struct("<8sIIB")


def save_embeddings(matrix: EmbeddingMatrix, path, meta=None) -> tuple[Path, Path]:
    """Write ``<path>`` (binary) and ``<path>.index.csv`` (``cik,year,row``).

    Binary layout, little-endian: magic, model tag (8 bytes), dimension and row
    count (uint32), sparse flag (uint8), JSON metadata (uint32 length + bytes),
    then either dense float64 rows or CSR arrays (nnz uint64, indptr int64,
    indices int32, data float64).
    """
    path = Path(path)
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEAD.pack(matrix.model_tag.encode()[:8], matrix.dim, len(matrix), int(matrix.is_sparse)))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        if matrix.is_sparse:
            m = matrix.values
            fh.write(struct.pack("<Q", m.nnz))
            fh.write(m.indptr.astype("<i8").tobytes())
            fh.write(m.indices.astype("<i4").tobytes())
            fh.write(m.data.astype("<f8").tobytes())
        else:
            fh.write(matrix.values.astype("<f8").tobytes())
    index = path.with_name(path.name + ".index.csv")
    with open(index, "w", newline="", encoding="utf-8") as fh:
        for k, v in sorted((meta or {}).items()):
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cik", "year", "row"])
        for row, (cik, year) in enumerate(matrix.keys):
            w.writerow([cik, year, row])
    return path, index


def load_embeddings(path) -> tuple[EmbeddingMatrix, dict]:
    path = Path(path)
    buf = path.read_bytes()
    if not buf.startswith(_MAGIC):
        raise EmbeddingError(f"{path}: not an embedding file")
    off = len(_MAGIC)
    tag, dim, rows, sparse = _HEAD.unpack_from(buf, off)
    off += _HEAD.size
    (meta_len,) = struct.unpack_from("<I", buf, off)
    off += 4
    meta = json.loads(buf[off: off + meta_len])
    off += meta_len
    if sparse:
        (nnz,) = struct.unpack_from("<Q", buf, off)
        off += 8
        indptr = np.frombuffer(buf, "<i8", rows + 1, off)
        off += 8 * (rows + 1)
        indices = np.frombuffer(buf, "<i4", nnz, off)
        off += 4 * nnz
        data = np.frombuffer(buf, "<f8", nnz, off)
        values = sp.csr_matrix((data.copy(), indices.copy(), indptr.copy()), shape=(rows, dim))
    else:
        values = np.frombuffer(buf, "<f8", rows * dim, off).reshape(rows, dim).copy()

    keys = [None] * rows
    index = path.with_name(path.name + ".index.csv")
    with open(index, encoding="utf-8") as fh:
        for rec in csv.DictReader(ln for ln in fh if not ln.startswith("#")):
            keys[int(rec["row"])] = (int(rec["cik"]), int(rec["year"]))
    if any(k is None for k in keys):
        raise EmbeddingError(f"{index}: index does not cover all {rows} rows")
    return EmbeddingMatrix(tag.rstrip(b"\0").decode(), keys, values), meta


def export_csv(matrix: EmbeddingMatrix, path, header_lines=()):
    """Dense CSV (``cik,year,v0..v{d-1}``) for external projection tools."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cik", "year"] + [f"v{j}" for j in range(matrix.dim)])
        dense = matrix.dense()
        for (cik, year), row in zip(matrix.keys, dense):
            w.writerow([cik, year] + [repr(float(x)) for x in row])


def check_unit_norm(matrix: EmbeddingMatrix, tol: float = NORM_TOL) -> bool:
    return bool(np.all(np.abs(matrix.norms() - 1.0) <= tol))
