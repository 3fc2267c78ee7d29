"""Acceptance criteria 1-9, one test each.

Every test records a single PASS/FAIL line (shown in the terminal summary and
printed under ``-s``) before asserting, so a failing criterion still reports.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest
from scipy.stats import ortho_group

from proddiv.cli import main
from proddiv.diversity import adjusted_q_diversity, industry_specificity, pca_diversity, q_diversity
from proddiv.embed import embed_boolean_corpus, embed_tfidf
from proddiv.ingest import extract_business_section, strip_risk_factors
from proddiv.pvdm import PvdmParams, PvdmTrainer, train_pvdm
from proddiv.simspace import ClassProfile, SimilarityMatrix
from proddiv.synth import extraction_fixture, two_topic_corpus, write_corpus
from proddiv.textprep import TokenizedDoc, Vocabulary, build_vocabulary
from proddiv.trends import AnnualSeries, linear_fit, permutation_pvalue, significance_stars

import oracles
from conftest import ACCEPTANCE, SIX_DOCS

# measured once on extraction_fixture(100, seed=0)
PINNED_EXTRACTED = 88
# measured once by running the full pipeline on write_corpus(..., range(2008, 2018)) with defaults
PINNED_R0 = {
    "boolean": -0.9743428695923925,
    "tfidf": -0.9930652720403025,
    "pvdm": -0.8821369232378399,
    "sic": -0.895535310012515,
}


def _record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _profile(a, Z):
    a = np.asarray(a, dtype=float)
    return ClassProfile(0, list(range(a.size)), np.asarray(Z, dtype=float), a / a.sum())


def test_criterion_1_analytic_identities():
    t0 = time.perf_counter()
    errs = []
    for s, q in itertools.product((2, 5, 20), (0, 2, 5)):
        ident = _profile(np.ones(s), np.eye(s))
        ones = _profile(np.arange(1, s + 1), np.ones((s, s)))
        errs += [
            abs(q_diversity(ident, q) - s) / s,
            abs(q_diversity(ones, q) - 1),
            abs(adjusted_q_diversity(ident, q) - 1),
            abs(adjusted_q_diversity(ones, q) - 1 / s) * s,
        ]
    elapsed = time.perf_counter() - t0
    worst = max(errs)
    _record(1, worst <= 1e-9 and elapsed < 1, f"max rel error {worst:.1e} (<= 1e-9), {elapsed:.3f}s (< 1s)")


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, monotone = 0.0, 0
    for _ in range(200):
        s = int(rng.integers(1, 9))
        U = np.triu(rng.random((s, s)), 1)
        p = _profile(rng.random(s) + 0.01, U + U.T + np.eye(s))
        vals = []
        for q in (0, 2, 5):
            got = q_diversity(p, q)
            want = oracles.q_diversity(p.a, p.Z, q)
            worst = max(worst, abs(got - want) / want)
            vals.append(got)
        monotone += all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and monotone == 200 and elapsed < 10
    _record(2, ok, f"max rel error {worst:.1e} (<= 1e-9), monotone {monotone}/200, {elapsed:.2f}s (< 10s)")


def test_criterion_3_industry_specificity():
    classes = [1, 1, 2, 2, 2, 3, 4, 4]
    labels = [str(i) for i in range(8)]
    flat = np.full((8, 8), 0.37)
    np.fill_diagonal(flat, 1)
    block = np.array([[1.0 if a == b else 0.5 for b in classes] for a in classes])
    flat_v = industry_specificity(SimilarityMatrix(labels, flat), dict(zip(labels, classes)))
    block_v = industry_specificity(SimilarityMatrix(labels, block), dict(zip(labels, classes)))
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 16))
        cls = list(rng.integers(0, 4, n))
        if len(set(cls)) < 2 or max(cls.count(c) for c in set(cls)) < 2:
            cls[:3] = [0, 0, 1]
        A = rng.random((n, n))
        M = (A + A.T) / 2
        np.fill_diagonal(M, 1)
        labs = [str(i) for i in range(n)]
        got = industry_specificity(SimilarityMatrix(labs, M), dict(zip(labs, cls)))
        worst = max(worst, abs(got - oracles.specificity(M, cls)))
    ok = flat_v == 1.0 and block_v == 2.0 and worst <= 1e-12
    _record(3, ok, f"flat {flat_v!r} (== 1), block {block_v!r} (== 2), 50 random max error {worst:.1e} (<= 1e-12)")


def test_criterion_4_pca_diversity():
    same = pca_diversity(np.tile([0.6, 0.0, 0.8], (6, 1)))
    one_hot = pca_diversity(np.eye(10))
    oracle = oracles.pca_count(np.eye(10), 0.9)
    rng = np.random.default_rng(4)
    invariant = 0
    for i in range(20):
        X = rng.normal(size=(int(rng.integers(5, 30)), 8)) * rng.uniform(0.1, 3, 8)
        invariant += pca_diversity(X) == pca_diversity(X @ ortho_group.rvs(8, random_state=i))
    ok = same == 0 and one_hot == 9 and oracle == 9 and invariant == 20
    _record(4, ok, f"identical -> {same} (0), 10 one-hot -> {one_hot} (oracle {oracle}, want 9), "
                   f"rotation-invariant {invariant}/20")


def test_criterion_5_bag_of_words():
    docs = [TokenizedDoc(i + 1, 2010, s.split()) for i, s in enumerate(SIX_DOCS)]
    token_lists = [d.tokens for d in docs]
    words = sorted({t for d in token_lists for t in d})
    df = oracles.df_counts(token_lists)
    vocab = Vocabulary(words, df, len(docs))
    b_err = np.abs(embed_boolean_corpus(docs, vocab).dense() - oracles.boolean_vectors(token_lists, words)).max()
    t = embed_tfidf(docs, vocab).dense()
    t_err = np.abs(t - oracles.tfidf_vectors(token_lists, words)).max()
    all_docs_weight = float(np.abs(t[:, words.index("market")]).max())
    ten = [TokenizedDoc(i, 2010, ["common"] + (["edge"] if i < 2 else []) + (["rare"] if i == 0 else []))
           for i in range(10)]
    v = build_vocabulary(ten, 0.2)
    ok = b_err <= 1e-12 and t_err <= 1e-12 and all_docs_weight == 0 and "edge" not in v and "rare" in v
    _record(5, ok, f"boolean error {b_err:.1e}, tfidf error {t_err:.1e} (<= 1e-12), all-docs weight "
                   f"{all_docs_weight}, 20% word {'excluded' if 'edge' not in v else 'KEPT'}")


def test_criterion_6_pvdm():
    t0 = time.perf_counter()
    docs = two_topic_corpus()
    a = train_pvdm(docs, PvdmParams(dim=16, epochs=20, seed=123))
    b = train_pvdm(docs, PvdmParams(dim=16, epochs=20, seed=123))
    bitwise = a.values.tobytes() == b.values.tobytes()
    lab = np.arange(len(docs)) % 2
    same = lab[:, None] == lab[None, :]
    off = ~np.eye(len(docs), dtype=bool)
    separated, finite = 0, True
    for seed in range(100):
        trainer = PvdmTrainer(PvdmParams(dim=16, epochs=20, seed=seed))
        m = trainer.fit(docs).values
        finite &= bool(np.isfinite(trainer.epoch_losses).all())
        C = m @ m.T
        separated += C[same & off].mean() > C[~same].mean()
    elapsed = time.perf_counter() - t0
    ok = bitwise and finite and separated >= 95 and elapsed < 60
    _record(6, ok, f"bitwise {bitwise}, finite losses {finite}, separated {separated}/100 (>= 95), "
                   f"{elapsed:.1f}s (< 60s)")


@pytest.mark.slow
def test_criterion_7_synthetic_trend(tmp_path):
    manifest = write_corpus(tmp_path / "corpus", range(2008, 2018))
    t0 = time.perf_counter()
    code = main(["run-all", "--manifest", str(manifest), "-o", str(tmp_path / "out")])
    elapsed = time.perf_counter() - t0
    summary = json.loads((tmp_path / "out" / "trend" / "summary.json").read_text())
    found = {t["metric"].split(":")[0]: t for t in summary["trends"] if t["metric"].endswith(":qD") and t["q"] == 0}
    parts, ok = [], code == 0 and elapsed < 300
    for model, want in PINNED_R0.items():
        t = found.get(model)
        good = t is not None and t["r"] < 0 and t["p"] <= 0.05 and abs(t["r"] - want) <= 1e-9
        ok &= good
        parts.append(f"{model} r={t['r']:.4f} p={t['p']:.2g}" if t else f"{model} missing")
    _record(7, ok, "; ".join(parts) + f"; run-all {elapsed:.0f}s (< 300s)")


def test_criterion_8_extraction():
    fixture = extraction_fixture(100, seed=0)
    extracted = sum(extract_business_section(f.text).method != "failed" for f in fixture)
    idempotent = 0
    for f in fixture:
        body = extract_business_section(f.text).business_text
        idempotent += all(strip_risk_factors(strip_risk_factors(x)) == strip_risk_factors(x) for x in (f.text, body))
    ok = extracted == PINNED_EXTRACTED and idempotent == 100
    _record(8, ok, f"extracted {extracted}/100 (pinned {PINNED_EXTRACTED}), strip idempotent {idempotent}/100")


def test_criterion_9_trends():
    fit = linear_fit(AnnualSeries("line", [(2000 + k, 3.0 - 0.5 * k) for k in range(8)]))
    exact = fit.slope == -0.5 and fit.intercept == 1003.0
    gaps = [abs(permutation_pvalue(x, y, seed=k) - oracles.ttest_p(x, y))
            for k, (x, y) in enumerate(oracles.noisy_series(20, seed=0))]
    stars = [significance_stars(p) for p in (0.009, 0.011, 0.049, 0.051)]
    ok = exact and max(gaps) <= 0.005 and stars == ["***", "**", "**", ""]
    _record(9, ok, f"exact line {exact} (slope {fit.slope!r}, intercept {fit.intercept!r}), "
                   f"max |p_perm - p_t| {max(gaps):.4f} (<= 0.005), stars {stars}")
