"""Experimental protocol: split generation, training loop, orchestration.

Two split modes mirror the two operational modes.  Open-set splits partition
subjects, so evaluation subjects are never seen in training; they drive the
binary authenticity task.  The closed-set split partitions each class's
captures, so every identity is known at training time; it drives the N+1
identification task.  Splits are expressed as sample_id lists covering both
modalities; capture pairs always land in the same subset so that score
fusion on the test set has a partner for every record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.preprocess import preprocess
from .data.samples import Dataset, Sample
from .errors import ProtocolError
from .models import ModelConfig, build_model
from .nn import Hyperparams, Network, forward, loss_and_gradients, sgd_momentum_step
from .seeding import derive_rng

__all__ = [
    "SplitPlan",
    "TrainingHistory",
    "EarlyStopper",
    "make_open_set_splits",
    "make_closed_set_splits",
    "train",
    "run_experiment",
    "SplitResult",
]

MODALITY_CODES = {"RGB": 0, "TH": 1}

_TAG_OPEN = 31
_TAG_CLOSED = 32
_TAG_SHUFFLE = 33
_TAG_MODEL_INIT = 34


@dataclass(frozen=True)
class SplitPlan:
    """One train/val/test partition, as sample_ids over both modalities."""

    split_id: int
    mode: str
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    rng_seed: int


@dataclass(frozen=True)
class TrainingHistory:
    """Per-epoch curves plus where early stopping landed (1-indexed epochs)."""

    train_loss: tuple[float, ...]
    train_acc: tuple[float, ...]
    val_acc: tuple[float, ...]
    stopped_epoch: int
    best_epoch: int


@dataclass
class EarlyStopper:
    """Patience counter: only a strict improvement of the best resets it."""

    patience: int
    best_acc: float = -np.inf
    best_epoch: int = 0

    def update(self, epoch: int, val_acc: float) -> bool:
        """Record this epoch's accuracy; True means stop after this epoch."""
        if val_acc > self.best_acc:
            self.best_acc = val_acc
            self.best_epoch = epoch
        return epoch - self.best_epoch >= self.patience


def _ratio_counts(n: int, ratios, min_one: bool) -> tuple[int, int, int]:
    """Floor the val/test shares, remainder to train; optionally floor at 1."""
    n_val = int(n * ratios[1])
    n_test = int(n * ratios[2])
    if min_one:
        n_val = max(1, n_val)
        n_test = max(1, n_test)
    return n - n_val - n_test, n_val, n_test


def make_open_set_splits(
    dataset: Dataset, n_splits: int = 10, ratios=(0.6, 0.2, 0.2), seed: int = 0
) -> list[SplitPlan]:
    """Subject-disjoint splits for the binary authenticity task.

    Each plan reshuffles the full subject list independently (plans may
    overlap each other, never internally).  A subject's samples, fakes
    included, follow the subject into its subset.
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) <= 0:
        raise ProtocolError(f"ratios must be positive and sum to 1, got {ratios}")
    subjects = dataset.subjects
    n_train, n_val, n_test = _ratio_counts(len(subjects), ratios, min_one=False)
    if min(n_train, n_val, n_test) < 1:
        raise ProtocolError(
            f"{len(subjects)} subjects are too few for three non-empty "
            f"subsets at ratios {ratios}"
        )
    plans = []
    for split_id in range(n_splits):
        rng = derive_rng(seed, _TAG_OPEN, split_id)
        order = [subjects[i] for i in rng.permutation(len(subjects))]
        groups = {
            "train": set(order[:n_train]),
            "val": set(order[n_train : n_train + n_val]),
            "test": set(order[n_train + n_val :]),
        }
        ids = {name: [] for name in groups}
        for s in dataset.samples:
            for name, members in groups.items():
                if s.subject_id in members:
                    ids[name].append(s.sample_id)
                    break
        plans.append(
            SplitPlan(
                split_id=split_id,
                mode="open_set",
                train=tuple(ids["train"]),
                val=tuple(ids["val"]),
                test=tuple(ids["test"]),
                rng_seed=seed,
            )
        )
    return plans


def make_closed_set_splits(
    dataset: Dataset, ratios=(0.6, 0.2, 0.2), seed: int = 0, split_id: int = 0
) -> SplitPlan:
    """Per-class capture split keeping every class in every subset.

    Captures (pair_ids) are the split unit, so each class's per-modality
    counts follow the 60:20:20 floors with the remainder going to train;
    val and test never drop below one capture per class.
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) <= 0:
        raise ProtocolError(f"ratios must be positive and sum to 1, got {ratios}")
    by_class: dict[object, list[str]] = {}
    seen = set()
    for s in dataset.samples:
        if s.pair_id in seen:
            continue
        seen.add(s.pair_id)
        key = "fake" if s.authenticity == "fake" else s.class_id
        by_class.setdefault(key, []).append(s.pair_id)

    rng = derive_rng(seed, _TAG_CLOSED, split_id)
    subset_pairs = {"train": set(), "val": set(), "test": set()}
    for key in sorted(by_class, key=str):
        pairs = by_class[key]
        if len(pairs) < 3:
            raise ProtocolError(
                f"class {key!r} has only {len(pairs)} captures; need at least 3 "
                f"to cover train, val, and test"
            )
        order = [pairs[i] for i in rng.permutation(len(pairs))]
        n_train, n_val, n_test = _ratio_counts(len(order), ratios, min_one=True)
        subset_pairs["train"].update(order[:n_train])
        subset_pairs["val"].update(order[n_train : n_train + n_val])
        subset_pairs["test"].update(order[n_train + n_val :])

    ids = {name: [] for name in subset_pairs}
    for s in dataset.samples:
        for name, members in subset_pairs.items():
            if s.pair_id in members:
                ids[name].append(s.sample_id)
                break
    return SplitPlan(
        split_id=split_id,
        mode="closed_set",
        train=tuple(ids["train"]),
        val=tuple(ids["val"]),
        test=tuple(ids["test"]),
        rng_seed=seed,
    )


def sample_label(sample: Sample, mode: str, num_classes: int) -> int:
    """Integer training label; the fake class is always the last index."""
    if mode == "open_set":
        return 1 if sample.authenticity == "fake" else 0
    if mode == "closed_set":
        return num_classes if sample.authenticity == "fake" else sample.class_id
    raise ProtocolError(f"unknown split mode {mode!r}")


def _subset_arrays(dataset, plan, subset_ids, modality, target, mode):
    samples = [
        dataset.by_id(sid) for sid in subset_ids
        if dataset.by_id(sid).modality == modality
    ]
    if not samples:
        raise ProtocolError(
            f"split {plan.split_id}: no {modality} samples in a subset"
        )
    x = np.stack([preprocess(s, target) for s in samples])
    y = np.array([sample_label(s, mode, dataset.num_classes) for s in samples])
    return x, y


def _batched_accuracy(net, x, y, batch=64):
    hits = 0
    for i in range(0, len(x), batch):
        probs = forward(net, x[i : i + batch])
        hits += int((probs.argmax(axis=1) == y[i : i + batch]).sum())
    return hits / len(x)


def train(
    net: Network,
    plan: SplitPlan,
    dataset: Dataset,
    modality: str,
    hp: Hyperparams,
    freeze_features: bool = False,
) -> tuple[Network, TrainingHistory]:
    """Mini-batch SGD with per-epoch shuffling and patience-based stopping.

    The epoch shuffle stream is derived from (hp.rng_seed, split_id,
    modality), so identical inputs give bit-identical histories.  The
    returned network carries the parameters of the best validation epoch;
    when several epochs tie at the best accuracy the latest one wins, since
    it has seen the most optimizer steps.  ``freeze_features`` zeroes every
    gradient except the final fully-connected layer's, training only the
    replaced bottleneck.
    """
    if modality not in MODALITY_CODES:
        raise ProtocolError(f"unknown modality {modality!r}")
    target = (net.input_shape[0], net.input_shape[1])
    x_train, y_train = _subset_arrays(dataset, plan, plan.train, modality, target, plan.mode)
    x_val, y_val = _subset_arrays(dataset, plan, plan.val, modality, target, plan.mode)
    if not plan.test:
        raise ProtocolError(f"split {plan.split_id}: empty test subset")

    rng = derive_rng(hp.rng_seed, _TAG_SHUFFLE, plan.split_id, MODALITY_CODES[modality])
    head = len(net.specs) - 2
    stopper = EarlyStopper(patience=hp.patience)
    best_params = net.copy_params()
    best_epoch = 0
    losses, train_accs, val_accs = [], [], []
    stopped = hp.max_epochs
    for epoch in range(1, hp.max_epochs + 1):
        order = rng.permutation(len(x_train))
        total_loss = 0.0
        for i in range(0, len(order), hp.batch_size):
            idx = order[i : i + hp.batch_size]
            loss, grads = loss_and_gradients(net, x_train[idx], y_train[idx])
            if freeze_features:
                grads = [
                    g if j == head else {k: np.zeros_like(v) for k, v in g.items()}
                    for j, g in enumerate(grads)
                ]
            sgd_momentum_step(net, grads, hp)
            total_loss += loss * len(idx)
        losses.append(total_loss / len(order))
        train_accs.append(_batched_accuracy(net, x_train, y_train))
        val_acc = _batched_accuracy(net, x_val, y_val)
        val_accs.append(val_acc)
        if val_acc >= stopper.best_acc:
            best_params = net.copy_params()
            best_epoch = epoch
        if stopper.update(epoch, val_acc):
            stopped = epoch
            break
    net.set_params(best_params)
    return net, TrainingHistory(
        train_loss=tuple(losses),
        train_acc=tuple(train_accs),
        val_acc=tuple(val_accs),
        stopped_epoch=stopped,
        best_epoch=best_epoch,
    )


@dataclass(frozen=True)
class SplitResult:
    plan: SplitPlan
    rgb_net: Network
    th_net: Network
    rgb_history: TrainingHistory
    th_history: TrainingHistory


def run_experiment(
    dataset: Dataset,
    mode: str,
    family: str,
    hp: Hyperparams,
    n_splits: int = 10,
    input_hw: tuple[int, int] = (64, 64),
    channel_scale: float = 0.125,
    freeze_features: bool = False,
) -> list[SplitResult]:
    """Train one RGB and one TH model per split and return them all.

    Output heads hold 2 classes in open_set mode and N+1 in closed_set mode,
    with the class ordering fixed by the dataset's class_map across both
    modalities.
    """
    if mode not in ("open_set", "closed_set"):
        raise ProtocolError(f"unknown experiment mode {mode!r}")
    have = {s.modality for s in dataset.samples}
    if have != {"RGB", "TH"}:
        raise ProtocolError(f"dataset must contain both modalities, found {sorted(have)}")
    if not any(s.authenticity == "fake" for s in dataset.samples):
        raise ProtocolError("dataset contains no fake samples to train against")

    if mode == "open_set":
        plans = make_open_set_splits(dataset, n_splits=n_splits, seed=hp.rng_seed)
        num_outputs = 2
    else:
        plans = [
            make_closed_set_splits(dataset, seed=hp.rng_seed, split_id=i)
            for i in range(n_splits)
        ]
        num_outputs = dataset.num_classes + 1

    results = []
    for plan in plans:
        nets = {}
        histories = {}
        for modality, channels in (("RGB", 3), ("TH", 1)):
            cfg = ModelConfig(
                family=family,
                input_size=(input_hw[0], input_hw[1], channels),
                num_outputs=num_outputs,
                channel_scale=channel_scale,
            )
            model_seed = int(
                derive_rng(
                    hp.rng_seed, _TAG_MODEL_INIT, plan.split_id, MODALITY_CODES[modality]
                ).integers(2**62)
            )
            net = build_model(cfg, seed=model_seed)
            nets[modality], histories[modality] = train(
                net, plan, dataset, modality, hp, freeze_features=freeze_features
            )
        results.append(
            SplitResult(
                plan=plan,
                rgb_net=nets["RGB"],
                th_net=nets["TH"],
                rgb_history=histories["RGB"],
                th_history=histories["TH"],
            )
        )
    return results
