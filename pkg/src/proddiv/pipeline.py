"""Pipeline stages. Each stage reads only files written by earlier stages.

Output layout under ``out_dir``::

    ingest/      sections/<cik>_<year>.txt, extraction_report.csv, records.csv
    embed/       <model>.bin (+ .index.csv), docs.csv, vocabulary.csv,
                 corpus_stats.csv, dropped.csv, pvdm_loss.csv
    similarity/  <model>_<year>.csv/.svg heatmaps, profiles/<model>_<year>.json
    diversity/   metrics.csv
    trend/       trends.csv, summary.json, plots/*.svg
    report/      report.csv and figures
"""

from __future__ import annotations

import csv
import json
import logging
import shutil
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

from . import diversity as dv
from .config import RunConfig
from .embed import embed_boolean_corpus, embed_tfidf, export_csv, load_embeddings, save_embeddings
from .ingest import extract_business_section, filter_corpus, load_manifest
from .pvdm import PvdmTrainer
from .sicmodel import SicTree, sic_similarity_matrix
from .simspace import ClassProfile, SimilarityMatrix, aggregate_classes, cosine_matrix, export_heatmap, sic_profile
from .textprep import (
    build_vocabulary,
    corpus_stats,
    default_lexicon,
    default_stopwords,
    read_wordlist,
    save_vocabulary,
    tokenize_and_clean,
)
from .trends import AnnualSeries, TrendError, linear_fit, pearson_trend

log = logging.getLogger("proddiv")

EMBEDDING_MODELS = ("boolean", "tfidf", "pvdm")
Q1_NOTE = "q=1 is computed with the limit exp(-sum a_i log (Za)_i)"


class StageError(RuntimeError):
    exit_code = 1


class MissingArtifact(StageError):
    exit_code = 2


def _write_csv(path, columns, rows, cfg: RunConfig, notes=()):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {cfg.header()}\n")
        for note in notes:
            fh.write(f"# {note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)
    return path


def _read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))


def _require(path: Path, command: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"missing {path}; run `proddiv {command}` first")
    return path


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _q_label(q: float) -> str:
    return f"{q:g}"


# --- ingest ------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> dict:
    """Filter the manifest, extract Business sections and write the report."""
    if cfg.manifest is None or not Path(cfg.manifest).is_file():
        raise MissingArtifact(f"manifest not found: {cfg.manifest}")
    out = Path(cfg.out_dir) / "ingest"
    sections = out / "sections"
    if sections.exists():
        shutil.rmtree(sections)
    sections.mkdir(parents=True)

    try:
        records = load_manifest(cfg.manifest)
    except ValueError as e:
        raise StageError(f"{cfg.manifest}: {e}") from None
    kept = [r for r in filter_corpus(records) if cfg.in_years(r.year)]
    report, extracted = [], []
    for rec in kept:
        try:
            raw = rec.text_path.read_text(encoding="utf-8", errors="replace")
        except OSError as e:
            raise StageError(f"{cfg.manifest}: cannot read filing for cik={rec.cik} year={rec.year}: {e}") from None
        result = extract_business_section(raw) if raw.strip() else None
        method = result.method if result else "failed"
        chars = result.chars if result else 0
        report.append((rec.cik, rec.year, method, chars))
        if method != "failed":
            name = f"{rec.cik}_{rec.year}.txt"
            (sections / name).write_text(result.business_text + "\n", encoding="utf-8")
            extracted.append((rec.cik, rec.year, rec.form_type, rec.sic_code, f"sections/{name}"))

    _write_csv(out / "extraction_report.csv", ("cik", "year", "method", "chars"), report, cfg)
    _write_csv(out / "records.csv", ("cik", "year", "form_type", "sic_code", "section"), extracted, cfg)
    failed = sum(1 for r in report if r[2] == "failed")
    log.info("ingest: %d manifest rows, %d after filtering, %d extracted, %d failed",
             len(records), len(kept), len(extracted), failed)
    return {"records": len(records), "kept": len(kept), "extracted": len(extracted), "failed": failed}


# --- embed -------------------------------------------------------------------


def _load_docs(cfg: RunConfig):
    ingest = Path(cfg.out_dir) / "ingest"
    rows = _read_csv(_require(ingest / "records.csv", "ingest"))
    lexicon = read_wordlist(cfg.lexicon) if cfg.lexicon else default_lexicon()
    stops = read_wordlist(cfg.stopwords) if cfg.stopwords else default_stopwords()
    rows.sort(key=lambda r: (int(r["year"]), int(r["cik"])))
    docs, sic = [], {}
    for r in rows:
        cik, year = int(r["cik"]), int(r["year"])
        if not cfg.in_years(year):
            continue
        text = (ingest / r["section"]).read_text(encoding="utf-8")
        docs.append(tokenize_and_clean(text, lexicon, stops, cik, year))
        sic[(cik, year)] = int(r["sic_code"])
    return docs, sic


def cmd_embed(cfg: RunConfig, export=False) -> dict:
    """Tokenize sections, build the vocabulary and embed every selected model."""
    out = Path(cfg.out_dir) / "embed"
    out.mkdir(parents=True, exist_ok=True)
    docs, sic = _load_docs(cfg)
    if not docs:
        raise StageError("no extracted sections to embed")

    by_year = defaultdict(list)
    for d in docs:
        by_year[d.year].append(d)
    stats = corpus_stats(by_year)
    _write_csv(out / "corpus_stats.csv", ("year", "tokens", "types", "mean_tokens", "mean_types"),
               [(y, t, ty, repr(mt), repr(mty)) for y, t, ty, mt, mty in stats.rows()], cfg)

    vocab = build_vocabulary(docs, cfg.max_df)
    save_vocabulary(vocab, out / "vocabulary.csv", [cfg.header(), f"max_df={cfg.max_df}"])

    dropped = []
    min_len = cfg.pvdm.window + 1
    kept = []
    for d in docs:
        if not any(t in vocab.index for t in d.tokens):
            dropped.append((d.cik, d.year, "no vocabulary words"))
        elif "pvdm" in cfg.models and len(d.tokens) < min_len:
            dropped.append((d.cik, d.year, f"fewer than {min_len} tokens"))
        else:
            kept.append(d)
    _write_csv(out / "dropped.csv", ("cik", "year", "reason"), dropped, cfg)
    if not kept:
        raise StageError("every document was dropped before embedding")
    _write_csv(out / "docs.csv", ("cik", "year", "sic_code", "tokens"),
               [(d.cik, d.year, sic[(d.cik, d.year)], len(d.tokens)) for d in kept], cfg)

    meta = {"header": cfg.header()}
    result = {"docs": len(kept), "dropped": len(dropped), "vocabulary": len(vocab)}
    for model in cfg.models:
        if model == "boolean":
            matrix = embed_boolean_corpus(kept, vocab)
        elif model == "tfidf":
            matrix = embed_tfidf(kept, vocab)
        elif model == "pvdm":
            params = replace(cfg.pvdm, seed=cfg.stage_seed("pvdm"))
            trainer = PvdmTrainer(params)
            matrix = trainer.fit(kept)
            _write_csv(out / "pvdm_loss.csv", ("epoch", "loss"),
                       [(i + 1, repr(v)) for i, v in enumerate(trainer.epoch_losses)], cfg,
                       [f"dim={params.dim} window={params.window} epochs={params.epochs} seed={params.seed}"])
        else:
            continue
        save_embeddings(matrix, out / f"{model}.bin", meta)
        if export:
            export_csv(matrix, out / f"{model}.csv", [cfg.header()])
        result[model] = {"rows": len(matrix), "dim": matrix.dim}
    log.info("embed: %d documents (%d dropped), vocabulary %d", len(kept), len(dropped), len(vocab))
    return result


# --- similarity --------------------------------------------------------------


def _firms(cfg: RunConfig):
    rows = _read_csv(_require(Path(cfg.out_dir) / "embed" / "docs.csv", "embed"))
    firms = defaultdict(list)
    for r in rows:
        firms[int(r["year"])].append((int(r["cik"]), int(r["sic_code"])))
    return dict(sorted(firms.items()))


def _tree(cfg: RunConfig, firms) -> SicTree:
    if cfg.sic_tree:
        return SicTree.from_csv(cfg.sic_tree)
    return SicTree.from_codes(c for year in firms.values() for _, c in year)


def _embedding(cfg: RunConfig, model: str):
    matrix, _ = load_embeddings(_require(Path(cfg.out_dir) / "embed" / f"{model}.bin", "embed"))
    return matrix


def cmd_similarity(cfg: RunConfig, svg=True) -> dict:
    """Per-year firm similarity heatmaps and class profiles for every model."""
    out = Path(cfg.out_dir) / "similarity"
    out.mkdir(parents=True, exist_ok=True)
    firms = _firms(cfg)
    tree = _tree(cfg, firms)
    header = [cfg.header()]
    written = 0
    for model in cfg.models:
        emb = None if model == "sic" else _embedding(cfg, model)
        for year, members in firms.items():
            meta = {str(cik): (code, cik) for cik, code in members}
            if model == "sic":
                matrix = sic_similarity_matrix(members, tree)
                profile = sic_profile([c for _, c in members], tree, year)
            else:
                sub = emb.for_year(year)
                matrix = cosine_matrix(sub)
                profile = aggregate_classes(sub, {cik: code for cik, code in members}, year)
            export_heatmap(matrix, meta, out / f"{model}_{year}.csv", header, svg=svg)
            _write_json(out / "profiles" / f"{model}_{year}.json", {"header": cfg.header(), **profile.to_dict()})
            written += 1
    log.info("similarity: %d model-years", written)
    return {"matrices": written}


# --- diversity ---------------------------------------------------------------


def _profile(cfg: RunConfig, model: str, year: int) -> ClassProfile:
    path = _require(Path(cfg.out_dir) / "similarity" / "profiles" / f"{model}_{year}.json", "similarity")
    return ClassProfile.from_dict(json.loads(path.read_text(encoding="utf-8")))


def cmd_diversity(cfg: RunConfig) -> dict:
    """Every diversity metric per model and year, written as ``metric,q,year,value``."""
    firms = _firms(cfg)
    values: list[dv.DiversityValue] = []
    skipped = []

    def add(metric, q, year, fn):
        try:
            values.append(dv.DiversityValue(metric, q, year, float(fn())))
        except dv.DiversityError as e:
            skipped.append((metric, q, year, str(e)))
            log.warning("diversity: %s year %s skipped: %s", metric, year, e)

    for year, members in firms.items():
        counts = dv.class_counts(code for _, code in members)
        add("counts:richness", None, year, lambda: dv.richness(counts))
        add("counts:shannon", None, year, lambda: dv.shannon_entropy(counts))
        add("counts:normalized_entropy", None, year, lambda: dv.normalized_entropy(counts))

    for model in cfg.models:
        emb = _embedding(cfg, model) if model in EMBEDDING_MODELS else None
        for year, members in firms.items():
            profile = _profile(cfg, model, year)
            for q in cfg.q:
                add(f"{model}:qD", q, year, lambda: dv.q_diversity(profile, q))
                add(f"{model}:qD_adj", q, year, lambda: dv.adjusted_q_diversity(profile, q))
            sim = SimilarityMatrix.from_csv(
                _require(Path(cfg.out_dir) / "similarity" / f"{model}_{year}.csv", "similarity"))
            classes = {str(cik): code for cik, code in members}
            add(f"{model}:specificity", None, year, lambda: dv.industry_specificity(sim, classes))
            if emb is not None:
                sub = emb.for_year(year)
                add(f"{model}:pca", None, year, lambda: dv.pca_diversity(sub, cfg.pca_threshold))

    notes = [f"pca_threshold={cfg.pca_threshold}"]
    if 1.0 in cfg.q:
        notes.append(Q1_NOTE)
        log.warning(Q1_NOTE)
    _write_csv(Path(cfg.out_dir) / "diversity" / "metrics.csv", ("metric", "q", "year", "value"),
               [v.row() for v in values], cfg, notes)
    return {"values": len(values), "skipped": len(skipped)}


# --- trend -------------------------------------------------------------------


def load_series(path) -> list[AnnualSeries]:
    groups = defaultdict(list)
    for r in _read_csv(path):
        q = float(r["q"]) if r["q"] else None
        groups[(r["metric"], q)].append((int(r["year"]), float(r["value"])))
    return [AnnualSeries(m, pts, q) for (m, q), pts in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0))]


def cmd_trend(cfg: RunConfig, plots=False) -> dict:
    """Trend fit and permutation-tested correlation for every metric series."""
    out = Path(cfg.out_dir) / "trend"
    series = load_series(_require(Path(cfg.out_dir) / "diversity" / "metrics.csv", "diversity"))
    reports, skipped = [], []
    for s in series:
        seed = cfg.stage_seed(f"trend:{s.metric}:{s.q}")
        try:
            rep = pearson_trend(s, n_perm=cfg.permutations, seed=seed, level=cfg.confidence)
        except TrendError as e:
            skipped.append({"metric": s.metric, "q": s.q, "reason": str(e)})
            log.warning("trend: %s (q=%s) skipped: %s", s.metric, s.q, e)
            continue
        reports.append(rep)
        if plots:
            from .plotting import trend_svg

            name = s.metric.replace(":", "_") + ("" if s.q is None else f"_q{_q_label(s.q)}")
            trend_svg(s, linear_fit(s, cfg.confidence), rep, out / "plots" / f"{name}.svg", [cfg.header()])

    _write_csv(out / "trends.csv", ("metric", "q", "slope", "ci90", "r", "p", "stars"),
               [r.row() for r in reports], cfg,
               [f"confidence={cfg.confidence} permutations={cfg.permutations}"])
    summary = {
        "header": cfg.header(),
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "models": list(cfg.models),
        "q": list(cfg.q),
        "q1_limit": 1.0 in cfg.q,
        "trends": [r.to_dict() for r in reports],
        "skipped": skipped,
    }
    _write_json(out / "summary.json", summary)
    return summary


# --- report ------------------------------------------------------------------


def cmd_report(cfg: RunConfig) -> dict:
    """Render figures for every metric family next to a delimited summary table."""
    from .plotting import corpus_figure, panel_figure
    from .textprep import CorpusStats, YearStats

    base = Path(cfg.out_dir)
    out = base / "report"
    out.mkdir(parents=True, exist_ok=True)
    summary = json.loads(_require(base / "trend" / "summary.json", "trend").read_text(encoding="utf-8"))
    series = {(s.metric, s.q): s for s in load_series(_require(base / "diversity" / "metrics.csv", "diversity"))}
    reports = {(t["metric"], t["q"]): t for t in summary["trends"]}
    header = [cfg.header()]

    stats_rows = _read_csv(_require(base / "embed" / "corpus_stats.csv", "embed"))
    stats = CorpusStats([
        YearStats(int(r["year"]), 0, int(r["tokens"]), int(r["types"]), float(r["mean_tokens"]), float(r["mean_types"]))
        for r in stats_rows
    ])
    figures = {"corpus": corpus_figure(stats, out / "corpus_stats.svg", header).name}

    def panels(keys):
        rows = []
        for label, key in keys:
            s = series.get(key)
            t = reports.get(key)
            if s is None or t is None:
                continue
            rows.append((label, s, linear_fit(s, cfg.confidence), _Report(t)))
        return rows

    families = [("counts", None, [(m, (f"counts:{m}", None)) for m in ("richness", "shannon", "normalized_entropy")])]
    for q in cfg.q:
        families.append((f"qD_q{_q_label(q)}", q, [(m, (f"{m}:qD", q)) for m in cfg.models]))
        families.append((f"qD_adj_q{_q_label(q)}", q, [(m, (f"{m}:qD_adj", q)) for m in cfg.models]))
    families.append(("pca", None, [(m, (f"{m}:pca", None)) for m in cfg.models if m in EMBEDDING_MODELS]))
    families.append(("specificity", None, [(m, (f"{m}:specificity", None)) for m in cfg.models]))

    figure_of = {}
    for name, q, keys in families:
        rows = panels(keys)
        if not rows:
            continue
        title = name if q is None else f"{name.split('_q')[0]} (q = {_q_label(q)})"
        path = panel_figure(rows, out / f"{name}.svg", title, header)
        figures[name] = path.name
        for _, key in keys:
            figure_of[key] = path.name

    rows = []
    for t in summary["trends"]:
        key = (t["metric"], t["q"])
        q = "" if t["q"] is None else _q_label(t["q"])
        rows.append((t["metric"], q, repr(t["slope"]), repr(t["ci90"]), repr(t["r"]), repr(t["p"]),
                     t["stars"], t["n"], figure_of.get(key, "")))
    _write_csv(out / "report.csv", ("metric", "q", "slope", "ci90", "r", "p", "stars", "n", "figure"), rows, cfg)
    return {"figures": figures, "rows": len(rows)}


class _Report:
    def __init__(self, d):
        self.r = d["r"]
        self.stars = d["stars"]


def run_all(cfg: RunConfig, plots=False, export=False) -> dict:
    cmd_ingest(cfg)
    cmd_embed(cfg, export=export)
    cmd_similarity(cfg)
    cmd_diversity(cfg)
    summary = cmd_trend(cfg, plots=plots)
    cmd_report(cfg)
    return summary

