import json
from pathlib import Path

import pytest

from proddiv.cli import main
from proddiv.config import ConfigError, RunConfig, load_config
from proddiv.synth import write_corpus

FAST = ["--pvdm-dim", "16", "--pvdm-epochs", "5", "--permutations", "2000"]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return write_corpus(root, range(2010, 2013), firms_per_topic=3)


@pytest.fixture(scope="module")
def run(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run-all", "--manifest", str(corpus), "-o", str(out), "--q", "0,1,2,5", *FAST]) == 0
    return out


def _tree(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_missing_manifest_exit_2(tmp_path, capsys):
    assert main(["ingest", "--manifest", str(tmp_path / "nope.csv"), "-o", str(tmp_path)]) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_unknown_model_is_config_error(tmp_path, capsys, corpus):
    assert main(["run-all", "--manifest", str(corpus), "-o", str(tmp_path / "o"), "--models", "boolean,lsa"]) == 2
    assert "lsa" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_bad_config_value_and_key(tmp_path):
    with pytest.raises(ConfigError):
        load_config(None, {"years": "2010-2012"})
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("colour = blue\n")
    with pytest.raises(ConfigError, match="colour"):
        load_config(cfg_file)
    assert main(["ingest", "-c", str(tmp_path / "missing.ini")]) == 2


def test_missing_upstream_names_prior_command(tmp_path, capsys, corpus):
    assert main(["diversity", "--manifest", str(corpus), "-o", str(tmp_path)]) == 2
    assert "run `proddiv embed` first" in capsys.readouterr().err
    assert main(["embed", "--manifest", str(corpus), "-o", str(tmp_path)]) == 2
    assert "run `proddiv ingest` first" in capsys.readouterr().err


def test_config_file_with_overrides(tmp_path, corpus):
    f = tmp_path / "run.ini"
    f.write_text(f"manifest = {corpus}\nmodels = sic, boolean\nq = 0, 2\nseed = 7\nyears = 2010:2011\npvdm_dim = 32\n")
    cfg = load_config(f, {"seed": "9"})
    assert cfg.models == ("sic", "boolean") and cfg.q == (0.0, 2.0)
    assert cfg.seed == 9 and cfg.years == (2010, 2011) and cfg.pvdm.dim == 32
    assert load_config(f).digest() == load_config(f).digest()
    assert load_config(f).digest() != cfg.digest()


def test_ingest_report(run, corpus):
    lines = [ln for ln in (run / "ingest" / "extraction_report.csv").read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "cik,year,method,chars"
    # 3 years x (8, 6, 4) topics x 3 firms, plus one empty filing per year; banks and lagged rows filtered
    assert len(lines) - 1 == 3 * (8 + 6 + 4) + 3
    assert sum(",failed," in ln for ln in lines) == 3


def test_run_all_summary(run):
    summary = json.loads((run / "trend" / "summary.json").read_text())
    assert summary["q1_limit"] is True
    got = {(t["metric"], t["q"]) for t in summary["trends"]}
    for model in ("boolean", "tfidf", "pvdm", "sic"):
        for q in (0.0, 1.0, 2.0, 5.0):
            assert (f"{model}:qD", q) in got and (f"{model}:qD_adj", q) in got
        assert (f"{model}:specificity", None) in got
        if model != "sic":
            assert (f"{model}:pca", None) in got
    for t in summary["trends"]:
        assert -1 <= t["r"] <= 1 and 0 <= t["p"] <= 1
    metrics = (run / "diversity" / "metrics.csv").read_text()
    assert "q = 1" in metrics or "q=1" in metrics


def test_every_output_has_header(run):
    cfg_header = json.loads((run / "trend" / "summary.json").read_text())["header"]
    assert cfg_header.startswith("proddiv 0.1.0 seed=0 config=")
    for p in run.rglob("*"):
        if p.suffix in (".csv", ".svg"):
            assert cfg_header in p.read_text(), p
        elif p.suffix == ".json":
            assert json.loads(p.read_text())["header"] == cfg_header
        elif p.suffix == ".bin":
            assert cfg_header.encode() in p.read_bytes()


def test_report_outputs(run):
    report = (run / "report" / "report.csv").read_text()
    assert "figure" in report
    svgs = list((run / "report").glob("*.svg"))
    assert len(svgs) >= 5


def test_rerun_is_byte_identical(run, corpus, tmp_path):
    assert main(["run-all", "--manifest", str(corpus), "-o", str(tmp_path), "--q", "0,1,2,5", *FAST]) == 0
    assert _tree(tmp_path) == _tree(run)


def test_stagewise_matches_run_all(run, corpus, tmp_path):
    args = ["--manifest", str(corpus), "-o", str(tmp_path), "--q", "0,1,2,5", *FAST]
    for cmd in ("ingest", "embed", "similarity", "diversity", "trend", "report"):
        assert main([cmd, *args]) == 0, cmd
    assert _tree(tmp_path) == _tree(run)


def test_model_subset_and_years(corpus, tmp_path):
    assert main(["run-all", "--manifest", str(corpus), "-o", str(tmp_path), "--models", "sic",
                 "--years", "2010:2011", "--permutations", "100"]) == 0
    summary = json.loads((tmp_path / "trend" / "summary.json").read_text())
    assert summary["models"] == ["sic"]
    assert all(t["metric"].split(":")[0] in ("sic", "counts") for t in summary["trends"])


def test_default_config():
    cfg = RunConfig()
    assert cfg.q == (0.0, 2.0, 5.0) and cfg.pvdm.dim == 300 and cfg.permutations == 100_000
    assert cfg.stage_seed("pvdm") != cfg.stage_seed("trend")
