"""Scoring, score fusion, PAD metrics, rank-1, and distribution statistics.

The fake class always sits at the last score index, in both the binary
authenticity head (real=0, fake=1) and the N+1 identity head (identities
0..N-1, fake=N).  PAD error rates follow the ISO/IEC 30107-3 definitions
with decisions taken by softmax argmax: APCER is the fraction of attack
records accepted as bona fide, BPCER the fraction of bona fide records
rejected as attacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.preprocess import preprocess
from .errors import FusionError, LabelError, ParameterError
from .nn import Network, forward

__all__ = [
    "ScoreRecord",
    "MetricsReport",
    "BoxplotStats",
    "ScoreHistogram",
    "score_dataset",
    "fuse_scores",
    "pad_metrics",
    "rank1",
    "boxplot_stats",
    "score_histogram",
]

MODALITIES = ("RGB", "TH", "FUSED")


@dataclass(frozen=True, eq=False)
class ScoreRecord:
    """One scored sample: probability vector plus its argmax decision."""

    sample_id: str
    pair_id: str
    modality: str
    true_label: int
    scores: np.ndarray
    predicted_label: int

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ParameterError(f"record {self.sample_id}: bad modality {self.modality!r}")
        if abs(float(self.scores.sum()) - 1.0) > 1e-6:
            raise ParameterError(
                f"record {self.sample_id}: scores sum to {float(self.scores.sum())!r}"
            )
        if self.predicted_label != int(np.argmax(self.scores)):
            raise ParameterError(
                f"record {self.sample_id}: predicted_label {self.predicted_label} "
                f"is not the argmax of the scores"
            )
        if not 0 <= self.true_label < len(self.scores):
            raise ParameterError(
                f"record {self.sample_id}: true_label {self.true_label} outside "
                f"[0, {len(self.scores)})"
            )


@dataclass(frozen=True)
class MetricsReport:
    """Argmax-decision metrics; None marks a metric with an empty denominator."""

    accuracy: float | None
    apcer: float | None
    bpcer: float | None
    rank1: float | None
    n_attack: int
    n_bonafide: int


@dataclass(frozen=True)
class BoxplotStats:
    mean: float
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float


@dataclass(frozen=True)
class ScoreHistogram:
    """Uniform [0, 1] bins; counts split by true authenticity."""

    bin_edges: tuple[float, ...]
    genuine: tuple[int, ...]
    fake: tuple[int, ...]


def score_dataset(net: Network, samples, fake_class_index: int, batch: int = 64):
    """Score preprocessed samples through ``net``, one record per sample.

    ``fake_class_index`` must be the net's last output; real samples map to
    label 0 when the head is binary and to their class_id otherwise.
    """
    if fake_class_index != net.num_outputs - 1:
        raise LabelError(
            f"fake_class_index {fake_class_index} must be the last output "
            f"index {net.num_outputs - 1}"
        )
    samples = list(samples)
    target = (net.input_shape[0], net.input_shape[1])
    records = []
    for i in range(0, len(samples), batch):
        chunk = samples[i : i + batch]
        x = np.stack([preprocess(s, target) for s in chunk])
        probs = forward(net, x)
        for s, p in zip(chunk, probs):
            if s.authenticity == "fake":
                label = fake_class_index
            else:
                label = 0 if fake_class_index == 1 else s.class_id
            records.append(
                ScoreRecord(
                    sample_id=s.sample_id,
                    pair_id=s.pair_id,
                    modality=s.modality,
                    true_label=label,
                    scores=p,
                    predicted_label=int(np.argmax(p)),
                )
            )
    return records


def fuse_scores(rgb: list[ScoreRecord], th: list[ScoreRecord]) -> list[ScoreRecord]:
    """Average per-pair score vectors into FUSED records, sorted by pair_id.

    Requires a one-to-one pair_id match with agreeing labels and score
    widths; the fused sample_id is the pair_id.
    """
    th_by_pair: dict[str, ScoreRecord] = {}
    for r in th:
        if r.pair_id in th_by_pair:
            raise FusionError(f"duplicate pair_id {r.pair_id!r} in TH records")
        th_by_pair[r.pair_id] = r
    fused = []
    seen = set()
    for r in rgb:
        if r.pair_id in seen:
            raise FusionError(f"duplicate pair_id {r.pair_id!r} in RGB records")
        seen.add(r.pair_id)
        partner = th_by_pair.pop(r.pair_id, None)
        if partner is None:
            raise FusionError(f"pair_id {r.pair_id!r} has no TH partner")
        if len(r.scores) != len(partner.scores):
            raise FusionError(
                f"pair_id {r.pair_id!r}: score widths differ "
                f"({len(r.scores)} vs {len(partner.scores)})"
            )
        if r.true_label != partner.true_label:
            raise FusionError(
                f"pair_id {r.pair_id!r}: true_label disagreement "
                f"({r.true_label} vs {partner.true_label})"
            )
        scores = (r.scores + partner.scores) / 2.0
        fused.append(
            ScoreRecord(
                sample_id=r.pair_id,
                pair_id=r.pair_id,
                modality="FUSED",
                true_label=r.true_label,
                scores=scores,
                predicted_label=int(np.argmax(scores)),
            )
        )
    if th_by_pair:
        missing = sorted(th_by_pair)[0]
        raise FusionError(f"pair_id {missing!r} has no RGB partner")
    return sorted(fused, key=lambda r: r.pair_id)


def pad_metrics(records: list[ScoreRecord]) -> MetricsReport:
    """APCER/BPCER/accuracy from argmax decisions; fake class = last index."""
    if not records:
        return MetricsReport(None, None, None, None, 0, 0)
    attacks = bona = attack_misses = bona_misses = correct = 0
    for r in records:
        fake_idx = len(r.scores) - 1
        is_attack = r.true_label == fake_idx
        decided_attack = r.predicted_label == fake_idx
        if is_attack:
            attacks += 1
            attack_misses += int(not decided_attack)
        else:
            bona += 1
            bona_misses += int(decided_attack)
        correct += int(is_attack == decided_attack)
    return MetricsReport(
        accuracy=correct / len(records),
        apcer=attack_misses / attacks if attacks else None,
        bpcer=bona_misses / bona if bona else None,
        rank1=None,
        n_attack=attacks,
        n_bonafide=bona,
    )


def rank1(records: list[ScoreRecord]) -> float | None:
    """Fraction of records whose argmax hits the true label; None if empty."""
    if not records:
        return None
    return sum(r.predicted_label == r.true_label for r in records) / len(records)


def boxplot_stats(values) -> BoxplotStats:
    """Quartiles by linear interpolation of order statistics, fenced whiskers."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise ParameterError("boxplot_stats needs at least one value")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr
    return BoxplotStats(
        mean=float(values.mean()),
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        iqr=float(iqr),
        whisker_low=float(values[values >= low_fence].min()),
        whisker_high=float(values[values <= high_fence].max()),
    )


def score_histogram(records: list[ScoreRecord], bins: int) -> ScoreHistogram:
    """Histogram the per-record statistic, split by true authenticity.

    Binary records use the real-class score (index 0); wider heads use the
    max score.  Bins are uniform over [0, 1] with the last bin right-closed.
    """
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    genuine_vals, fake_vals = [], []
    for r in records:
        stat = float(r.scores[0]) if len(r.scores) == 2 else float(r.scores.max())
        if r.true_label == len(r.scores) - 1:
            fake_vals.append(stat)
        else:
            genuine_vals.append(stat)
    genuine, edges = np.histogram(genuine_vals, bins=bins, range=(0.0, 1.0))
    fake, _ = np.histogram(fake_vals, bins=bins, range=(0.0, 1.0))
    return ScoreHistogram(
        bin_edges=tuple(float(e) for e in edges),
        genuine=tuple(int(c) for c in genuine),
        fake=tuple(int(c) for c in fake),
    )
