"""Sample and Dataset containers shared by the generator, loader, and protocol."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import IngestionError

__all__ = ["FAKE_CLASS_ID", "Sample", "Dataset", "build_dataset"]

# class_id carried by fake samples; real samples use [0, num_classes)
FAKE_CLASS_ID = -1

MODALITIES = ("RGB", "TH")
HAND_SIDES = ("left", "right")
AUTHENTICITIES = ("real", "fake")

_CHANNELS = {"RGB": 3, "TH": 1}


@dataclass(frozen=True, eq=False)
class Sample:
    """One captured image plus its labels.

    ``pair_id`` links the RGB and TH images taken together; ``class_id`` is
    the identity label in [0, N) for real samples and FAKE_CLASS_ID for
    fakes.  ``image`` is float64 in [0, 1], shaped (h, w, 3) for RGB and
    (h, w, 1) for TH.
    """

    sample_id: str
    subject_id: int
    hand_side: str
    modality: str
    authenticity: str
    session: int
    class_id: int
    pair_id: str
    image: np.ndarray

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise IngestionError(f"sample {self.sample_id}: bad modality {self.modality!r}")
        if self.hand_side not in HAND_SIDES:
            raise IngestionError(f"sample {self.sample_id}: bad hand_side {self.hand_side!r}")
        if self.authenticity not in AUTHENTICITIES:
            raise IngestionError(
                f"sample {self.sample_id}: bad authenticity {self.authenticity!r}"
            )
        if self.authenticity == "fake" and self.class_id != FAKE_CLASS_ID:
            raise IngestionError(
                f"sample {self.sample_id}: fake samples must carry class_id "
                f"{FAKE_CLASS_ID}, got {self.class_id}"
            )
        if self.authenticity == "real" and self.class_id < 0:
            raise IngestionError(
                f"sample {self.sample_id}: real samples need class_id >= 0"
            )
        img = self.image
        if img.ndim != 3 or img.shape[2] != _CHANNELS[self.modality]:
            raise IngestionError(
                f"sample {self.sample_id}: {self.modality} image must have "
                f"{_CHANNELS[self.modality]} channels, got shape {tuple(img.shape)}"
            )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable sample collection with the identity-class index.

    ``class_map`` sends (subject_id, hand_side) to class_id for real classes.
    ``generator_info`` holds per-sample synthesis metadata (silhouette/heat
    statistics) when the dataset came from the synthetic generator.
    """

    samples: tuple[Sample, ...]
    num_classes: int
    class_map: dict[tuple[int, str], int]
    generator_info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def by_modality(self, modality: str) -> list[Sample]:
        return [s for s in self.samples if s.modality == modality]

    def by_id(self, sample_id: str) -> Sample:
        return self._index[sample_id]

    @property
    def subjects(self) -> list[int]:
        return sorted({s.subject_id for s in self.samples})

    def __post_init__(self):
        object.__setattr__(self, "_index", {s.sample_id: s for s in self.samples})


def build_dataset(samples, generator_info=None) -> Dataset:
    """Validate cross-sample invariants and assemble a Dataset.

    Checks: unique sample_ids, metadata agreement within each pair_id,
    contiguous real class ids, and class_map consistency.  Raises
    IngestionError with the offending id on any violation.
    """
    samples = tuple(samples)
    seen: dict[str, Sample] = {}
    for s in samples:
        if s.sample_id in seen:
            raise IngestionError(f"duplicate sample_id {s.sample_id!r}")
        seen[s.sample_id] = s

    pairs: dict[str, Sample] = {}
    for s in samples:
        first = pairs.setdefault(s.pair_id, s)
        if first is s:
            continue
        for attr in ("subject_id", "hand_side", "authenticity", "session"):
            if getattr(first, attr) != getattr(s, attr):
                raise IngestionError(
                    f"pair {s.pair_id!r}: {attr} conflict between "
                    f"{first.sample_id!r} and {s.sample_id!r}"
                )

    class_map: dict[tuple[int, str], int] = {}
    for s in samples:
        if s.authenticity != "real":
            continue
        key = (s.subject_id, s.hand_side)
        if class_map.setdefault(key, s.class_id) != s.class_id:
            raise IngestionError(
                f"sample {s.sample_id!r}: class_id {s.class_id} disagrees with "
                f"earlier assignment {class_map[key]} for subject "
                f"{s.subject_id} {s.hand_side}"
            )
    ids = sorted(class_map.values())
    if ids and ids != list(range(len(ids))):
        raise IngestionError(
            f"real class ids must be contiguous from 0, got {sorted(set(ids))}"
        )
    return Dataset(
        samples=samples,
        num_classes=len(ids),
        class_map=class_map,
        generator_info=dict(generator_info or {}),
    )
