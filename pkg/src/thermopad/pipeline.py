"""End-to-end experiment orchestration behind ``thermopad run``.

Runs splits, per-modality training, scoring, fusion, metrics, boxplot
statistics, and histograms, then writes every artifact under one
timestamp-free directory named by mode, family, and seed, so reruns with
the same config land on byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

from .config import ExperimentConfig
from .data import Dataset, generate_synthetic_dataset, load_manifest
from .errors import ThermopadError
from .evaluation import (
    fuse_scores,
    pad_metrics,
    rank1,
    boxplot_stats,
    score_dataset,
    score_histogram,
)
from .nn import save_weights
from .protocol import run_experiment
from .reports import (
    write_boxplots,
    write_histogram_csv,
    write_histories_json,
    write_metrics,
    write_plans_json,
    write_score_csv,
)

HISTOGRAM_BINS = 20

MODALITY_ORDER = ("RGB", "TH", "FUSED")


class StageFailure(ThermopadError):
    """Wraps any error from a pipeline stage with the stage's name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


def experiment_dir_name(cfg: ExperimentConfig) -> str:
    return f"exp-{cfg.mode}-{cfg.family}-seed{cfg.hp.rng_seed}"


def resolve_dataset(cfg: ExperimentConfig, data_dir: str | Path | None) -> Dataset:
    """Load the manifest when a directory is given, else synthesize."""
    if data_dir is not None:
        return load_manifest(data_dir)
    return generate_synthetic_dataset(cfg.synthetic)


def run_pipeline(cfg: ExperimentConfig, dataset: Dataset, out_dir: str | Path) -> Path:
    """Execute every stage and return the experiment directory."""
    exp_dir = Path(out_dir) / experiment_dir_name(cfg)
    stage = "setup"
    try:
        exp_dir.mkdir(parents=True, exist_ok=True)
        (exp_dir / "weights").mkdir(exist_ok=True)
        (exp_dir / "scores").mkdir(exist_ok=True)
        (exp_dir / "histograms").mkdir(exist_ok=True)

        stage = "training"
        results = run_experiment(
            dataset,
            mode=cfg.protocol_mode,
            family=cfg.family,
            hp=cfg.hp,
            n_splits=cfg.n_splits,
            input_hw=cfg.input_size,
            channel_scale=cfg.channel_scale,
        )

        stage = "scoring"
        fake_idx = 1 if cfg.protocol_mode == "open_set" else dataset.num_classes
        by_id = {s.sample_id: s for s in dataset}
        per_split = []
        for r in results:
            test = [by_id[i] for i in r.plan.test]
            rgb = score_dataset(r.rgb_net, [s for s in test if s.modality == "RGB"], fake_idx)
            th = score_dataset(r.th_net, [s for s in test if s.modality == "TH"], fake_idx)
            fused = fuse_scores(rgb, th)
            per_split.append({"RGB": rgb, "TH": th, "FUSED": fused})

        stage = "metrics"
        rows = []
        headline: dict[str, list[float]] = {m: [] for m in MODALITY_ORDER}
        for r, scored in zip(results, per_split):
            for modality in MODALITY_ORDER:
                records = scored[modality]
                report = pad_metrics(records)
                row = {
                    "split": r.plan.split_id,
                    "modality": modality,
                    "accuracy": report.accuracy,
                    "apcer": report.apcer,
                    "bpcer": report.bpcer,
                    "rank1": None,
                }
                if cfg.mode == "identity":
                    row["rank1"] = rank1(records)
                rows.append(row)
                headline[modality].append(
                    row["rank1"] if cfg.mode == "identity" else row["accuracy"]
                )

        stage = "boxplots"
        headline_name = "rank1" if cfg.mode == "identity" else "accuracy"
        box = {m: boxplot_stats(headline[m]) for m in MODALITY_ORDER}

        stage = "histograms"
        pooled = {
            m: score_histogram(
                [rec for scored in per_split for rec in scored[m]], HISTOGRAM_BINS
            )
            for m in MODALITY_ORDER
        }

        stage = "artifacts"
        write_plans_json(exp_dir / "plans.json", [r.plan for r in results])
        histories = {}
        for r in results:
            histories[f"split{r.plan.split_id:02d}_rgb"] = r.rgb_history
            histories[f"split{r.plan.split_id:02d}_th"] = r.th_history
        write_histories_json(exp_dir / "histories.json", histories)
        for r in results:
            save_weights(r.rgb_net, exp_dir / "weights" / f"split{r.plan.split_id:02d}_rgb.weights")
            save_weights(r.th_net, exp_dir / "weights" / f"split{r.plan.split_id:02d}_th.weights")
        for r, scored in zip(results, per_split):
            for modality in MODALITY_ORDER:
                write_score_csv(
                    exp_dir / "scores" / f"split{r.plan.split_id:02d}_{modality.lower()}.csv",
                    scored[modality],
                )
        write_metrics(exp_dir / "metrics.json", exp_dir / "metrics.txt", rows)
        write_boxplots(exp_dir / "boxplots.json", exp_dir / "boxplots.txt", box, headline_name)
        for modality in MODALITY_ORDER:
            write_histogram_csv(
                exp_dir / "histograms" / f"{modality.lower()}.csv", pooled[modality]
            )
    except StageFailure:
        raise
    except Exception as exc:
        raise StageFailure(stage, exc) from exc
    return exp_dir
