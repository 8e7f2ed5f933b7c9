"""
An authenticity-driven (open-set) experiment
============================================

The open-set protocol asks the question a deployment would ask: does a
detector trained on some people reject attacks against people it has
never seen?  Train, validation, and test subjects are disjoint, and the
classifier head is binary, real versus attack.

This is a scaled-down run so it finishes in a couple of minutes; the full
protocol uses more subjects, more images, 64x64 inputs, and ten splits.
"""

import time

from thermopad.data import SyntheticParams, generate_synthetic_dataset
from thermopad.evaluation import pad_metrics, score_dataset
from thermopad.nn import Hyperparams
from thermopad.protocol import run_experiment

params = SyntheticParams(num_subjects=6, images_per_class_per_modality=4,
                         image_size=(32, 32), rng_seed=1)
dataset = generate_synthetic_dataset(params)
print(f"dataset: {len(dataset)} samples over {len(dataset.subjects)} subjects")

# The reference learning rate is tuned for the full-size runs; this tiny
# one converges faster with a slightly hotter step.
hp = Hyperparams(learning_rate=0.0005, max_epochs=120, rng_seed=1)
start = time.monotonic()
results = run_experiment(dataset, mode="open_set", family="alex_micro", hp=hp,
                         n_splits=2, input_hw=(32, 32), channel_scale=0.0625)
print(f"trained {2 * len(results)} models in {time.monotonic() - start:.1f}s")

# Each result carries the split plan and one trained network per modality.
# Scoring the held-out test samples yields per-sample probability records;
# pad_metrics reduces them to the two standard error rates.  APCER is the
# fraction of attacks accepted as real, BPCER the fraction of genuine
# presentations rejected.
print(f"\n{'split':>5} {'modality':>8} {'accuracy':>9} {'apcer':>7} {'bpcer':>7} {'epochs':>7}")
for res in results:
    plan = res.plan
    for modality, net, hist in (("RGB", res.rgb_net, res.rgb_history),
                                ("TH", res.th_net, res.th_history)):
        test = [dataset.by_id(sid) for sid in plan.test
                if dataset.by_id(sid).modality == modality]
        records = score_dataset(net, test, fake_class_index=1)
        m = pad_metrics(records)
        print(f"{plan.split_id:>5} {modality:>8} {m.accuracy:>9.4f} "
              f"{m.apcer:>7.4f} {m.bpcer:>7.4f} {hist.stopped_epoch:>7}")

# The thermal side usually wins: paper at room temperature simply does not
# look like a live hand in long-wave infrared, while a good print can pass
# for skin in RGB.  With this few subjects the gap is noisy, so expect the
# occasional split where RGB keeps up.
