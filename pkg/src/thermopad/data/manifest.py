"""Dataset persistence: CSV manifest plus per-sample PNG images.

RGB images are written as 8-bit 3-channel PNG, TH as 16-bit single-channel
grayscale.  Manifest paths are relative to the manifest's directory, so a
dataset directory can be moved wholesale.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import IngestionError
from .samples import Dataset, Sample, build_dataset

__all__ = ["MANIFEST_COLUMNS", "save_dataset", "load_manifest"]

MANIFEST_COLUMNS = (
    "sample_id",
    "subject_id",
    "hand_side",
    "modality",
    "authenticity",
    "session",
    "class_id",
    "pair_id",
    "path",
)

_INFO_FILE = "generator_info.json"


def _write_png(sample: Sample, path: Path) -> None:
    img = np.clip(sample.image, 0.0, 1.0)
    if sample.modality == "RGB":
        Image.fromarray(np.round(img * 255).astype(np.uint8)).save(path)
    else:
        raw = np.round(img[:, :, 0] * 65535).astype(np.uint16)
        Image.fromarray(raw).save(path)


def save_dataset(dataset: Dataset, out_dir) -> Path:
    """Write manifest.csv and an images/ tree under ``out_dir``.

    Returns the manifest path.  Output is byte-deterministic for a given
    dataset: rows follow dataset order and no timestamps are embedded.
    """
    out_dir = Path(out_dir)
    images = out_dir / "images"
    images.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for s in dataset.samples:
            rel = f"images/{s.sample_id}.png"
            _write_png(s, out_dir / rel)
            writer.writerow(
                [
                    s.sample_id,
                    s.subject_id,
                    s.hand_side,
                    s.modality,
                    s.authenticity,
                    s.session,
                    s.class_id,
                    s.pair_id,
                    rel,
                ]
            )
    if dataset.generator_info:
        with open(out_dir / _INFO_FILE, "w") as fh:
            json.dump(dataset.generator_info, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return manifest


def _read_png(path: Path, modality: str, sample_id: str) -> np.ndarray:
    if not path.is_file():
        raise IngestionError(f"sample {sample_id!r}: image file missing: {path}")
    with Image.open(path) as im:
        arr = np.asarray(im)
    if modality == "RGB":
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise IngestionError(
                f"sample {sample_id!r}: expected 8-bit 3-channel RGB PNG, "
                f"got dtype {arr.dtype} shape {arr.shape}"
            )
        return arr.astype(np.float64) / 255.0
    if arr.ndim != 2:
        raise IngestionError(
            f"sample {sample_id!r}: expected single-channel TH PNG, got shape {arr.shape}"
        )
    depth = 65535.0 if arr.dtype.itemsize >= 2 else 255.0
    return (arr.astype(np.float64) / depth)[:, :, None]


def load_manifest(path) -> Dataset:
    """Parse a manifest.csv (or its directory) back into a Dataset."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.csv"
    if not path.is_file():
        raise IngestionError(f"manifest not found: {path}")
    root = path.parent
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(MANIFEST_COLUMNS):
            raise IngestionError(
                f"bad manifest header {header}, expected {list(MANIFEST_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(MANIFEST_COLUMNS):
                raise IngestionError(
                    f"{path.name} line {lineno}: expected "
                    f"{len(MANIFEST_COLUMNS)} fields, got {len(row)}"
                )
            rec = dict(zip(MANIFEST_COLUMNS, row))
            try:
                subject = int(rec["subject_id"])
                session = int(rec["session"])
                class_id = int(rec["class_id"])
            except ValueError as exc:
                raise IngestionError(f"{path.name} line {lineno}: {exc}") from exc
            image = _read_png(root / rec["path"], rec["modality"], rec["sample_id"])
            samples.append(
                Sample(
                    sample_id=rec["sample_id"],
                    subject_id=subject,
                    hand_side=rec["hand_side"],
                    modality=rec["modality"],
                    authenticity=rec["authenticity"],
                    session=session,
                    class_id=class_id,
                    pair_id=rec["pair_id"],
                    image=image,
                )
            )
    info = {}
    info_path = root / _INFO_FILE
    if info_path.is_file():
        with open(info_path) as fh:
            info = json.load(fh)
    return build_dataset(samples, info)
