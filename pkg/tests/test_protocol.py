"""Protocol tests: split invariants, early stopping, training determinism."""

import numpy as np
import pytest

from thermopad.data import FAKE_CLASS_ID, Sample, SyntheticParams, build_dataset, generate_synthetic_dataset
from thermopad.errors import ProtocolError
from thermopad.models import ModelConfig, build_model
from thermopad.nn import Hyperparams
from thermopad.protocol import (
    EarlyStopper,
    SplitPlan,
    make_closed_set_splits,
    make_open_set_splits,
    run_experiment,
    train,
)

FAST_HP = Hyperparams(learning_rate=0.01, rng_seed=0, max_epochs=3)


@pytest.fixture(scope="module")
def dataset():
    return generate_synthetic_dataset(
        SyntheticParams(
            num_subjects=6,
            images_per_class_per_modality=4,
            image_size=(32, 32),
            rng_seed=9,
        )
    )


def subjects_of(dataset, ids):
    return {dataset.by_id(i).subject_id for i in ids}


def classes_of(dataset, ids):
    out = set()
    for i in ids:
        s = dataset.by_id(i)
        out.add("fake" if s.authenticity == "fake" else s.class_id)
    return out


class TestOpenSetSplits:
    def test_ten_subjects_partition_six_two_two(self):
        d = generate_synthetic_dataset(
            SyntheticParams(num_subjects=10, images_per_class_per_modality=1,
                            image_size=(32, 32), rng_seed=1)
        )
        plans = make_open_set_splits(d, n_splits=4, seed=3)
        assert len(plans) == 4
        for p in plans:
            tr = subjects_of(d, p.train)
            va = subjects_of(d, p.val)
            te = subjects_of(d, p.test)
            assert (len(tr), len(va), len(te)) == (6, 2, 2)
            assert not (tr & va or tr & te or va & te)

    def test_too_few_subjects(self, dataset):
        d = generate_synthetic_dataset(
            SyntheticParams(num_subjects=4, images_per_class_per_modality=1,
                            image_size=(32, 32), rng_seed=1)
        )
        with pytest.raises(ProtocolError, match="too few"):
            make_open_set_splits(d)

    def test_same_seed_identical_plans(self, dataset):
        a = make_open_set_splits(dataset, n_splits=3, seed=7)
        b = make_open_set_splits(dataset, n_splits=3, seed=7)
        assert a == b

    def test_splits_resampled_independently(self, dataset):
        plans = make_open_set_splits(dataset, n_splits=6, seed=7)
        test_sets = {tuple(sorted(subjects_of(dataset, p.test))) for p in plans}
        assert len(test_sets) > 1

    def test_fakes_follow_their_subject(self, dataset):
        for p in make_open_set_splits(dataset, n_splits=3, seed=2):
            for name in ("train", "val", "test"):
                members = subjects_of(dataset, getattr(p, name))
                for sid in getattr(p, name):
                    s = dataset.by_id(sid)
                    if s.authenticity == "fake":
                        assert s.subject_id in members

    def test_pairs_never_straddle_subsets(self, dataset):
        for p in make_open_set_splits(dataset, n_splits=3, seed=2):
            pair_sets = [
                {dataset.by_id(i).pair_id for i in getattr(p, name)}
                for name in ("train", "val", "test")
            ]
            assert not (pair_sets[0] & pair_sets[1])
            assert not (pair_sets[0] & pair_sets[2])
            assert not (pair_sets[1] & pair_sets[2])


def make_pair(pid, subject, class_id, authenticity, n=8):
    common = dict(
        subject_id=subject,
        hand_side="left",
        authenticity=authenticity,
        session=1,
        class_id=class_id,
        pair_id=pid,
    )
    rgb = Sample(f"{pid}-rgb", modality="RGB", image=np.zeros((n, n, 3)), **common)
    th = Sample(f"{pid}-th", modality="TH", image=np.zeros((n, n, 1)), **common)
    return [rgb, th]


def capture_dataset(real_captures, fake_captures):
    samples = []
    for j in range(real_captures):
        samples += make_pair(f"r{j:03d}", 1, 0, "real")
    for j in range(fake_captures):
        samples += make_pair(f"f{j:03d}", 1, FAKE_CLASS_ID, "fake")
    return build_dataset(samples)


class TestClosedSetSplits:
    def test_forty_five_captures_split_27_9_9(self):
        d = capture_dataset(45, 5)
        plan = make_closed_set_splits(d, seed=0)
        per_class = {}
        for name in ("train", "val", "test"):
            ids = getattr(plan, name)
            th_ids = [i for i in ids if d.by_id(i).modality == "TH"]
            for kind in ("real", "fake"):
                per_class[(kind, name)] = sum(
                    1 for i in th_ids if d.by_id(i).authenticity == kind
                )
        assert (per_class[("real", "train")], per_class[("real", "val")],
                per_class[("real", "test")]) == (27, 9, 9)
        assert (per_class[("fake", "train")], per_class[("fake", "val")],
                per_class[("fake", "test")]) == (3, 1, 1)

    def test_tiny_class_gets_one_val_one_test(self):
        d = capture_dataset(5, 3)
        plan = make_closed_set_splits(d, seed=0)
        val_real = [i for i in plan.val
                    if d.by_id(i).modality == "TH" and d.by_id(i).authenticity == "real"]
        test_real = [i for i in plan.test
                     if d.by_id(i).modality == "TH" and d.by_id(i).authenticity == "real"]
        assert len(val_real) == 1 and len(test_real) == 1

    def test_two_capture_class_rejected(self):
        d = capture_dataset(2, 3)
        with pytest.raises(ProtocolError, match="class 0"):
            make_closed_set_splits(d, seed=0)

    def test_every_class_in_every_subset(self, dataset):
        plan = make_closed_set_splits(dataset, seed=4)
        want = set(range(dataset.num_classes)) | {"fake"}
        for name in ("train", "val", "test"):
            assert classes_of(dataset, getattr(plan, name)) == want

    def test_sample_ids_pairwise_disjoint(self, dataset):
        plan = make_closed_set_splits(dataset, seed=4)
        tr, va, te = set(plan.train), set(plan.val), set(plan.test)
        assert not (tr & va or tr & te or va & te)
        assert len(tr | va | te) == len(dataset)

    def test_determinism(self, dataset):
        assert make_closed_set_splits(dataset, seed=5) == make_closed_set_splits(
            dataset, seed=5
        )


class TestEarlyStopper:
    def test_plateau_from_epoch_three_stops_at_thirteen(self):
        # strictly improves through epoch 3, then never exceeds the best
        accs = [0.5, 0.6, 0.7] + [0.7, 0.65] * 20
        stopper = EarlyStopper(patience=10)
        stopped = None
        for epoch, acc in enumerate(accs, start=1):
            if stopper.update(epoch, acc):
                stopped = epoch
                break
        assert stopped == 13
        assert stopper.best_epoch == 3

    def test_equal_accuracy_does_not_reset_patience(self):
        stopper = EarlyStopper(patience=2)
        assert not stopper.update(1, 0.9)
        assert not stopper.update(2, 0.9)
        assert stopper.update(3, 0.9)

    def test_late_improvement_resets(self):
        stopper = EarlyStopper(patience=3)
        for epoch, acc in enumerate([0.5, 0.4, 0.4, 0.6], start=1):
            assert not stopper.update(epoch, acc)
        assert stopper.best_epoch == 4


def toy_plan_and_dataset():
    """Linearly separable 8+2+2 single-modality toy problem."""
    rng = np.random.default_rng(0)
    samples = []
    for j in range(12):
        fake = j % 2 == 1
        img = rng.normal(0.5, 0.02, size=(32, 32, 1))
        if fake:
            img[16:] += 0.4
        else:
            img[:16] += 0.4
        samples += [
            Sample(
                f"t{j:02d}-th",
                subject_id=1 + j % 4,
                hand_side="left",
                modality="TH",
                authenticity="fake" if fake else "real",
                session=1,
                class_id=FAKE_CLASS_ID if fake else 2 * (j % 4),
                pair_id=f"t{j:02d}",
                image=np.clip(img, 0, 1),
            )
        ]
    # keep real class ids contiguous: remap via subject blocks
    fixed = []
    next_id = {}
    for s in samples:
        if s.authenticity == "real":
            cid = next_id.setdefault(s.subject_id, len(next_id))
        else:
            cid = FAKE_CLASS_ID
        fixed.append(
            Sample(
                s.sample_id, s.subject_id, s.hand_side, s.modality,
                s.authenticity, s.session, cid, s.pair_id, s.image,
            )
        )
    d = build_dataset(fixed)
    ids = [s.sample_id for s in fixed]
    plan = SplitPlan(
        split_id=0, mode="open_set",
        train=tuple(ids[:8]), val=tuple(ids[8:10]), test=tuple(ids[10:]),
        rng_seed=0,
    )
    return plan, d


class TestTrain:
    def test_toy_separable_reaches_perfect_train_accuracy(self):
        plan, d = toy_plan_and_dataset()
        net = build_model(ModelConfig("alex_micro", (32, 32, 1), 2, channel_scale=0.05), seed=1)
        hp = Hyperparams(learning_rate=0.05, rng_seed=0, max_epochs=40)
        net, hist = train(net, plan, d, "TH", hp)
        assert hist.train_acc[-1] == 1.0

    def test_same_seed_bit_identical_history(self, dataset):
        plan = make_open_set_splits(dataset, n_splits=1, seed=1)[0]

        def run():
            net = build_model(
                ModelConfig("alex_micro", (32, 32, 1), 2, channel_scale=0.05), seed=2
            )
            return train(net, plan, dataset, "TH", FAST_HP)[1]

        assert run() == run()

    def test_returned_net_carries_best_epoch_params(self, dataset):
        from thermopad.protocol import _batched_accuracy, _subset_arrays

        plan = make_open_set_splits(dataset, n_splits=1, seed=1)[0]
        net = build_model(
            ModelConfig("alex_micro", (32, 32, 1), 2, channel_scale=0.05), seed=2
        )
        net, hist = train(net, plan, dataset, "TH", FAST_HP)
        assert hist.val_acc[hist.best_epoch - 1] == max(hist.val_acc)
        x_val, y_val = _subset_arrays(dataset, plan, plan.val, "TH", (32, 32), "open_set")
        assert _batched_accuracy(net, x_val, y_val) == max(hist.val_acc)

    def test_stopping_invariant(self, dataset):
        plan = make_open_set_splits(dataset, n_splits=1, seed=1)[0]
        net = build_model(
            ModelConfig("alex_micro", (32, 32, 1), 2, channel_scale=0.05), seed=2
        )
        hp = Hyperparams(learning_rate=0.05, rng_seed=3, max_epochs=30, patience=4)
        _, hist = train(net, plan, dataset, "TH", hp)
        assert hist.stopped_epoch - hist.best_epoch <= hp.patience
        assert len(hist.val_acc) == hist.stopped_epoch

    def test_freeze_features_trains_only_head(self, dataset):
        plan = make_open_set_splits(dataset, n_splits=1, seed=1)[0]
        net = build_model(
            ModelConfig("alex_micro", (32, 32, 1), 2, channel_scale=0.05), seed=2
        )
        before = net.copy_params()
        head = len(net.specs) - 2
        net, _ = train(net, plan, dataset, "TH", FAST_HP, freeze_features=True)
        for i, (p, q) in enumerate(zip(net.params, before)):
            for k in p:
                if i == head:
                    assert not np.array_equal(p[k], q[k])
                else:
                    assert np.array_equal(p[k], q[k])

    def test_empty_subset_rejected(self, dataset):
        plan = SplitPlan(0, "open_set", ("s001-left-r00-th",), (), ("x",), 0)
        net = build_model(
            ModelConfig("alex_micro", (32, 32, 1), 2, channel_scale=0.05), seed=2
        )
        with pytest.raises(ProtocolError):
            train(net, plan, dataset, "TH", FAST_HP)


class TestRunExperiment:
    def test_open_set_trains_two_models_per_split(self, dataset):
        results = run_experiment(
            dataset, "open_set", "alex_micro", FAST_HP,
            n_splits=2, input_hw=(32, 32), channel_scale=0.05,
        )
        assert len(results) == 2
        for r in results:
            assert r.rgb_net.num_outputs == 2
            assert r.th_net.num_outputs == 2
            assert r.plan.mode == "open_set"

    def test_closed_set_heads_are_n_plus_one(self, dataset):
        results = run_experiment(
            dataset, "closed_set", "alex_micro", FAST_HP,
            n_splits=1, input_hw=(32, 32), channel_scale=0.05,
        )
        assert results[0].rgb_net.num_outputs == dataset.num_classes + 1

    def test_missing_modality_rejected(self, dataset):
        th_only = build_dataset([s for s in dataset if s.modality == "TH"])
        with pytest.raises(ProtocolError, match="both modalities"):
            run_experiment(th_only, "open_set", "alex_micro", FAST_HP)

    def test_no_fakes_rejected(self, dataset):
        reals = build_dataset([s for s in dataset if s.authenticity == "real"])
        with pytest.raises(ProtocolError, match="fake"):
            run_experiment(reals, "open_set", "alex_micro", FAST_HP)

    def test_unknown_mode_rejected(self, dataset):
        with pytest.raises(ProtocolError, match="mode"):
            run_experiment(dataset, "semi_open", "alex_micro", FAST_HP)
