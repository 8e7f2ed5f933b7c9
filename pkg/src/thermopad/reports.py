"""Artifact writers and readers for experiment directories.

Every writer is deterministic: fixed key order, no timestamps, floats
serialized with shortest round-trip repr.  Score CSVs are the exchange
format; JSON carries structured summaries; the text table and SVG files
are presentational views of the same numbers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import IngestionError
from .evaluation import BoxplotStats, ScoreHistogram, ScoreRecord
from .protocol import SplitPlan, TrainingHistory


def write_score_csv(path: str | Path, records: list[ScoreRecord]) -> None:
    if not records:
        raise IngestionError("cannot write an empty score csv")
    width = len(records[0].scores)
    header = ["sample_id", "pair_id", "modality", "true_label", "predicted_label"]
    header += [f"score_{k}" for k in range(width)]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            row = [r.sample_id, r.pair_id, r.modality, r.true_label, r.predicted_label]
            row += [repr(float(s)) for s in r.scores]
            writer.writerow(row)


def read_score_csv(path: str | Path) -> list[ScoreRecord]:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"score csv not found: {path}")
    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:5] != [
            "sample_id",
            "pair_id",
            "modality",
            "true_label",
            "predicted_label",
        ]:
            raise IngestionError(f"{path}: not a score csv (bad header)")
        for row in reader:
            scores = np.array([float(v) for v in row[5:]])
            records.append(
                ScoreRecord(
                    sample_id=row[0],
                    pair_id=row[1],
                    modality=row[2],
                    true_label=int(row[3]),
                    scores=scores,
                    predicted_label=int(row[4]),
                )
            )
    if not records:
        raise IngestionError(f"{path}: no records")
    return records


def write_json(path: str | Path, payload) -> None:
    with Path(path).open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_plans_json(path: str | Path, plans: list[SplitPlan]) -> None:
    write_json(
        path,
        [
            {
                "split_id": p.split_id,
                "mode": p.mode,
                "rng_seed": p.rng_seed,
                "train": list(p.train),
                "val": list(p.val),
                "test": list(p.test),
            }
            for p in plans
        ],
    )


def write_histories_json(path: str | Path, histories: dict[str, TrainingHistory]) -> None:
    write_json(
        path,
        {
            key: {
                "train_loss": list(h.train_loss),
                "train_acc": list(h.train_acc),
                "val_acc": list(h.val_acc),
                "stopped_epoch": h.stopped_epoch,
                "best_epoch": h.best_epoch,
            }
            for key, h in histories.items()
        },
    )


def write_metrics(json_path: str | Path, txt_path: str | Path, rows: list[dict]) -> None:
    """Per-(split, modality) metric rows as JSON plus an aligned text table."""
    write_json(json_path, rows)
    Path(txt_path).write_text(metrics_table(rows))


_TABLE_COLUMNS = ("split", "modality", "accuracy", "apcer", "bpcer", "rank1")


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def metrics_table(rows: list[dict]) -> str:
    grid = [list(_TABLE_COLUMNS)]
    grid += [[_cell(row.get(col)) for col in _TABLE_COLUMNS] for row in rows]
    widths = [max(len(line[i]) for line in grid) for i in range(len(_TABLE_COLUMNS))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in grid]
    return "\n".join(lines) + "\n"


def write_boxplots(json_path: str | Path, txt_path: str | Path, stats: dict[str, BoxplotStats], metric: str) -> None:
    write_json(json_path, {mod: asdict(s) for mod, s in stats.items()})
    Path(txt_path).write_text(boxplot_table(stats, metric))


def boxplot_table(stats: dict[str, BoxplotStats], metric: str) -> str:
    cols = ("modality", "mean", "median", "q1", "q3", "iqr", "whisker_low", "whisker_high")
    grid = [list(cols)]
    for mod in sorted(stats):
        s = stats[mod]
        grid.append([mod] + [f"{getattr(s, c):.4f}" for c in cols[1:]])
    widths = [max(len(line[i]) for line in grid) for i in range(len(cols))]
    lines = [f"per-split {metric} distribution"]
    lines += ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in grid]
    return "\n".join(lines) + "\n"


def write_histogram_csv(path: str | Path, hist: ScoreHistogram) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "genuine_count", "fake_count"])
        for k in range(len(hist.genuine)):
            writer.writerow(
                [
                    repr(hist.bin_edges[k]),
                    repr(hist.bin_edges[k + 1]),
                    hist.genuine[k],
                    hist.fake[k],
                ]
            )


def read_histogram_csv(path: str | Path) -> ScoreHistogram:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"histogram csv not found: {path}")
    lows, highs, genuine, fake = [], [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["bin_low", "bin_high", "genuine_count", "fake_count"]:
            raise IngestionError(f"{path}: not a histogram csv")
        for row in reader:
            lows.append(float(row[0]))
            highs.append(float(row[1]))
            genuine.append(int(row[2]))
            fake.append(int(row[3]))
    if not lows:
        raise IngestionError(f"{path}: no bins")
    return ScoreHistogram(
        bin_edges=tuple(lows + [highs[-1]]),
        genuine=tuple(genuine),
        fake=tuple(fake),
    )


# ---------------------------------------------------------------- svg views


def _svg_open(width: int, height: int) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def svg_boxplots(stats: dict[str, BoxplotStats], title: str) -> str:
    """Fixed-geometry boxplot panel, one box per modality, y in [0, 1]."""
    width, height, pad = 420, 300, 40
    plot_h = height - 2 * pad

    def y(v: float) -> float:
        return pad + (1.0 - v) * plot_h

    parts = _svg_open(width, height)
    parts.append(
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="13">{title}</text>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<line x1="{pad}" y1="{y(frac):.1f}" x2="{width - pad}" y2="{y(frac):.1f}" '
            f'stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{pad - 6}" y="{y(frac) + 4:.1f}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{frac:.2f}</text>'
        )
    slot = (width - 2 * pad) / max(len(stats), 1)
    for i, mod in enumerate(sorted(stats)):
        s = stats[mod]
        cx = pad + slot * (i + 0.5)
        half = min(30.0, slot * 0.3)
        parts.append(
            f'<line x1="{cx:.1f}" y1="{y(s.whisker_low):.1f}" x2="{cx:.1f}" '
            f'y2="{y(s.whisker_high):.1f}" stroke="black"/>'
        )
        for wv in (s.whisker_low, s.whisker_high):
            parts.append(
                f'<line x1="{cx - half / 2:.1f}" y1="{y(wv):.1f}" '
                f'x2="{cx + half / 2:.1f}" y2="{y(wv):.1f}" stroke="black"/>'
            )
        parts.append(
            f'<rect x="{cx - half:.1f}" y="{y(s.q3):.1f}" width="{2 * half:.1f}" '
            f'height="{max(y(s.q1) - y(s.q3), 0.5):.1f}" fill="#9ecae1" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{cx - half:.1f}" y1="{y(s.median):.1f}" x2="{cx + half:.1f}" '
            f'y2="{y(s.median):.1f}" stroke="black" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{height - 12}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{mod}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_histogram(hist: ScoreHistogram, title: str) -> str:
    """Side-by-side genuine/fake bars per score bin."""
    width, height, pad = 460, 300, 40
    plot_h = height - 2 * pad
    n = len(hist.genuine)
    top = max(max(hist.genuine), max(hist.fake), 1)
    slot = (width - 2 * pad) / n
    parts = _svg_open(width, height)
    parts.append(
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="13">{title}</text>'
    )
    for k in range(n):
        x0 = pad + k * slot
        for j, (count, color) in enumerate(((hist.genuine[k], "#2c7fb8"), (hist.fake[k], "#d95f0e"))):
            bar_h = plot_h * count / top
            parts.append(
                f'<rect x="{x0 + j * slot / 2 + 1:.1f}" y="{pad + plot_h - bar_h:.1f}" '
                f'width="{slot / 2 - 2:.1f}" height="{bar_h:.1f}" fill="{color}"/>'
            )
    for frac in (0.0, 0.5, 1.0):
        x = pad + frac * (width - 2 * pad)
        parts.append(
            f'<text x="{x:.1f}" y="{height - 12}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{frac:.1f}</text>'
        )
    parts.append(
        f'<text x="{width - pad}" y="{pad - 8}" text-anchor="end" font-family="monospace" '
        f'font-size="10">genuine #2c7fb8  fake #d95f0e  max {top}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
