"""Command-line front end: gen-data, run, and report.

Exit codes: 0 on success, 1 when a pipeline stage fails, 2 for
configuration or I/O problems (bad config file, unreadable dataset,
incomplete experiment directory).
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .config import load_config
from .data import generate_synthetic_dataset, save_dataset
from .errors import ConfigError, IngestionError, ThermopadError
from .evaluation import boxplot_stats, rank1, pad_metrics, score_histogram
from .pipeline import MODALITY_ORDER, HISTOGRAM_BINS, resolve_dataset, run_pipeline
from .reports import (
    boxplot_table,
    read_score_csv,
    svg_boxplots,
    svg_histogram,
    write_boxplots,
    write_histogram_csv,
)

_SPLIT_CSV = re.compile(r"^split(\d+)_(rgb|th|fused)\.csv$")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermopad",
        description="Presentation-attack-detection workbench for paired RGB+TH hand images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a synthetic dataset directory")
    gen.add_argument("--config", help="INI config file (defaults apply when omitted)")
    gen.add_argument("--out", required=True, help="dataset output directory")

    run = sub.add_parser("run", help="run a full experiment")
    run.add_argument("--config", help="INI config file (defaults apply when omitted)")
    run.add_argument("--data", help="dataset directory; omit to synthesize from config")
    run.add_argument("--out", required=True, help="directory to hold the experiment directory")

    rep = sub.add_parser("report", help="consolidate reports for a finished experiment")
    rep.add_argument("--exp", required=True, help="experiment directory from a run")
    rep.add_argument("--svg", action="store_true", help="also render SVG plots")
    return parser


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config)
    dataset = generate_synthetic_dataset(cfg.synthetic)
    save_dataset(dataset, args.out)
    print(f"classes: {dataset.num_classes}")
    print(f"samples: {len(dataset)}")
    print(f"dataset written to {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    dataset = resolve_dataset(cfg, args.data)
    exp_dir = run_pipeline(cfg, dataset, args.out)
    print(f"experiment written to {exp_dir}")
    print((exp_dir / "boxplots.txt").read_text(), end="")
    return 0


def _collect_scores(exp_dir: Path):
    """Split-indexed score records from an experiment's scores directory."""
    scores_dir = exp_dir / "scores"
    if not scores_dir.is_dir():
        raise IngestionError(f"missing artifacts: {scores_dir}")
    found: dict[int, dict[str, Path]] = {}
    for entry in scores_dir.iterdir():
        m = _SPLIT_CSV.match(entry.name)
        if m:
            found.setdefault(int(m.group(1)), {})[m.group(2).upper()] = entry
    if not found:
        raise IngestionError(f"missing artifacts: no score csvs under {scores_dir}")
    missing = [
        str(scores_dir / f"split{split:02d}_{mod.lower()}.csv")
        for split in sorted(found)
        for mod in MODALITY_ORDER
        if mod not in found[split]
    ]
    if missing:
        raise IngestionError("missing artifacts: " + ", ".join(missing))
    return {
        split: {mod: read_score_csv(path) for mod, path in paths.items()}
        for split, paths in found.items()
    }


def cmd_report(args) -> int:
    exp_dir = Path(args.exp)
    if not exp_dir.is_dir():
        raise IngestionError(f"not an experiment directory: {exp_dir}")
    per_split = _collect_scores(exp_dir)

    # identity runs carry multi-class score vectors; authenticity runs are binary
    any_records = next(iter(per_split.values()))["RGB"]
    identity = len(any_records[0].scores) > 2
    headline_name = "rank1" if identity else "accuracy"

    headline: dict[str, list[float]] = {m: [] for m in MODALITY_ORDER}
    for split in sorted(per_split):
        for mod in MODALITY_ORDER:
            records = per_split[split][mod]
            value = rank1(records) if identity else pad_metrics(records).accuracy
            headline[mod].append(value)
    box = {m: boxplot_stats(headline[m]) for m in MODALITY_ORDER}
    pooled = {
        m: score_histogram(
            [rec for split in sorted(per_split) for rec in per_split[split][m]],
            HISTOGRAM_BINS,
        )
        for m in MODALITY_ORDER
    }

    write_boxplots(exp_dir / "boxplots.json", exp_dir / "boxplots.txt", box, headline_name)
    (exp_dir / "histograms").mkdir(exist_ok=True)
    for mod in MODALITY_ORDER:
        write_histogram_csv(exp_dir / "histograms" / f"{mod.lower()}.csv", pooled[mod])
    if args.svg:
        (exp_dir / "boxplots.svg").write_text(
            svg_boxplots(box, f"per-split {headline_name} by modality")
        )
        for mod in MODALITY_ORDER:
            (exp_dir / "histograms" / f"{mod.lower()}.svg").write_text(
                svg_histogram(pooled[mod], f"{mod} score distribution")
            )
    table = boxplot_table(box, headline_name)
    print(table, end="")
    print(f"report written under {exp_dir}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"gen-data": cmd_gen_data, "run": cmd_run, "report": cmd_report}
    try:
        return handlers[args.command](args)
    except (ConfigError, IngestionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ThermopadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
