"""Command-line entry point: ``proddiv <command> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__, pipeline
from .config import ConfigError, load_config

COMMANDS = ("ingest", "embed", "similarity", "diversity", "trend", "run-all", "report")


def _common(p: argparse.ArgumentParser):
    p.add_argument("-c", "--config", help="INI-style key = value file")
    p.add_argument("--manifest", help="filing manifest CSV")
    p.add_argument("-o", "--out", dest="out_dir", help="output directory")
    p.add_argument("--lexicon", help="noun lexicon file (default: bundled list)")
    p.add_argument("--stopwords", help="stopword file (default: bundled list)")
    p.add_argument("--sic-tree", help="SIC tree CSV (default: derived from the codes present)")
    p.add_argument("--seed", help="global seed")
    p.add_argument("--years", help="inclusive year range A:B")
    p.add_argument("--models", help="comma-separated subset of boolean,tfidf,pvdm,sic")
    p.add_argument("--q", help="comma-separated diversity orders, e.g. 0,2,5")
    p.add_argument("--max-df", help="vocabulary document-frequency cap")
    p.add_argument("--permutations", help="permutations per trend test")
    p.add_argument("--pvdm-dim", help="PV-DM vector size (default 300)")
    p.add_argument("--pvdm-epochs", help="PV-DM training epochs (default 20)")
    p.add_argument("--pvdm-window", help="PV-DM context words before the target (default 8)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proddiv", description="Product diversity from firm filings.")
    parser.add_argument("--version", action="version", version=f"proddiv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "ingest": "filter the manifest and extract Business sections",
        "embed": "tokenize sections and build Boolean, TF-IDF and PV-DM embeddings",
        "similarity": "per-year firm similarity heatmaps and class profiles",
        "diversity": "diversity and specificity metrics per model and year",
        "trend": "trend fits and permutation-tested correlations",
        "run-all": "run every stage in order",
        "report": "render figures and the summary table",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _common(p)
        if name in ("embed", "run-all"):
            p.add_argument("--export-csv", action="store_true", help="also write dense CSV embeddings")
        if name in ("trend", "run-all"):
            p.add_argument("--plots", action="store_true", help="one SVG scatter+fit per series")
        if name == "similarity":
            p.add_argument("--no-svg", action="store_true", help="skip SVG heatmaps")
    return parser


_OVERRIDES = ("manifest", "out_dir", "lexicon", "stopwords", "sic_tree", "seed", "years", "models", "q",
              "max_df", "permutations", "pvdm_dim", "pvdm_epochs", "pvdm_window")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, {k: getattr(args, k) for k in _OVERRIDES})
    except ConfigError as e:
        print(f"proddiv: config error: {e}", file=sys.stderr)
        return 2

    try:
        if args.command == "ingest":
            result = pipeline.cmd_ingest(cfg)
        elif args.command == "embed":
            result = pipeline.cmd_embed(cfg, export=args.export_csv)
        elif args.command == "similarity":
            result = pipeline.cmd_similarity(cfg, svg=not args.no_svg)
        elif args.command == "diversity":
            result = pipeline.cmd_diversity(cfg)
        elif args.command == "trend":
            result = {"trends": len(pipeline.cmd_trend(cfg, plots=args.plots)["trends"])}
        elif args.command == "report":
            result = pipeline.cmd_report(cfg)
        else:
            summary = pipeline.run_all(cfg, plots=args.plots, export=args.export_csv)
            result = {"trends": len(summary["trends"]), "summary": str(cfg.out_dir / "trend" / "summary.json")}
    except pipeline.StageError as e:
        print(f"proddiv {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except (ValueError, KeyError, OSError) as e:
        print(f"proddiv {args.command}: {e}", file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
