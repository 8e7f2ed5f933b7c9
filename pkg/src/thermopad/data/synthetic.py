"""Seeded synthetic generator for paired RGB+TH real and fake hand images.

Each identity class (one subject hand) gets its own sampled geometry: a palm
ellipse plus five finger capsules, with per-class finger angles, lengths and
widths.  Real captures jitter that geometry with a small pose transform
shared by the RGB and TH images of a pair.  Fakes model a paper printout of
a real capture: the RGB side re-renders the source photo with print
artifacts, while the TH side shows the warm blob of the attacker's own hand
leaking through the paper, offset and shape-mismatched from the printed
silhouette.

All randomness flows from SyntheticParams.rng_seed through tagged
sub-streams, so a fixed seed reproduces every image bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ParameterError
from ..seeding import derive_rng
from .samples import FAKE_CLASS_ID, Dataset, Sample, build_dataset

__all__ = ["SyntheticParams", "generate_synthetic_dataset"]

# sub-stream tags (arbitrary fixed ints, one per independent random choice)
_TAG_GEOMETRY = 11
_TAG_APPEARANCE = 12
_TAG_POSE = 13
_TAG_RGB_NOISE = 14
_TAG_TH_NOISE = 15
_TAG_ATTACKER = 16
_TAG_PRINT = 17

# real thermal field
_PALM_TEMP = 0.80
_FINGER_COOLING = 0.22
_TH_PATTERN_AMP = 0.05
_TH_BACKGROUND = 0.18
_TH_BG_GRADIENT = 0.02
_SESSION_OFFSET = 0.10
_TH_BLUR = 1.0
_TH_NOISE = 0.0015

# real rgb appearance
_SKIN_BASE = (0.78, 0.60, 0.48)
_SKIN_JITTER = 0.06
_RGB_TEXTURE_AMP = 0.035
_RGB_BG_BASE = 0.35
_RGB_NOISE = 0.008

# printout artifacts (fake rgb)
_PRINT_FLATTEN = (0.45, 0.75)
_HALFTONE_AMP = (0.006, 0.022)
_PAPER_TONE = (0.50, 0.90)
_BORDER_PX = (1, 3)

# attacker hand behind the printout (fake th)
_BLOB_TEMP = 0.42
_BLOB_BLUR = 5.5
_ATTACK_SHIFT = (0.15, 0.19)
_ATTACK_SCALE = (1.10, 1.25)
_ATTACK_ROT = 0.30
_ATTACK_CURL = (0.30, 0.40)
_SHEET_ATTEN = 0.70
_SHEET_TEMP = 0.25
_SHEET_MARGIN = (0.04, 0.10)


@dataclass(frozen=True)
class SyntheticParams:
    """Knobs for one generated dataset; both hands are always produced."""

    num_subjects: int
    sessions: int = 2
    images_per_class_per_modality: int = 6
    fake_images_per_class: int = 2
    image_size: tuple[int, int] = (64, 64)
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_subjects < 2:
            raise ParameterError(f"num_subjects must be >= 2, got {self.num_subjects}")
        if self.sessions < 1:
            raise ParameterError(f"sessions must be >= 1, got {self.sessions}")
        if self.images_per_class_per_modality < 1:
            raise ParameterError(
                f"images_per_class_per_modality must be >= 1, "
                f"got {self.images_per_class_per_modality}"
            )
        if self.fake_images_per_class < 0:
            raise ParameterError(
                f"fake_images_per_class must be >= 0, got {self.fake_images_per_class}"
            )
        if len(self.image_size) != 2 or min(self.image_size) < 32:
            raise ParameterError(
                f"image_size must be at least 32x32, got {self.image_size}"
            )


def _unit_grid(h, w):
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    return np.meshgrid(ys, xs, indexing="ij")


def _hand_geometry(rng, hand_side):
    """Per-class hand shape in canonical unit coordinates (y down, x right)."""
    geo = {
        "palm_c": np.array([0.60, 0.50]) + rng.uniform(-0.02, 0.02, size=2),
        "palm_ab": np.array([0.145, 0.115]) + rng.uniform(-0.018, 0.018, size=2),
        "angles": np.deg2rad([-52.0, -26.0, 0.0, 24.0, 50.0])
        + rng.uniform(-0.10, 0.10, size=5),
        "lengths": np.array([0.16, 0.24, 0.27, 0.24, 0.19])
        * rng.uniform(0.85, 1.15, size=5),
        "widths": np.array([0.042, 0.034, 0.036, 0.034, 0.030])
        * rng.uniform(0.85, 1.15, size=5),
    }
    if hand_side == "left":
        geo["angles"] = -geo["angles"][::-1]
        geo["lengths"] = geo["lengths"][::-1].copy()
        geo["widths"] = geo["widths"][::-1].copy()
    return geo


def _appearance(rng):
    """Per-class color, texture, and thermal-pattern parameters."""
    return {
        "skin": np.array(_SKIN_BASE) + rng.uniform(-_SKIN_JITTER, _SKIN_JITTER, size=3),
        # sinusoid banks: rows of (frequency, direction, phase, amplitude share)
        "texture": np.column_stack(
            [
                rng.uniform(6.0, 14.0, size=4),
                rng.uniform(0.0, np.pi, size=4),
                rng.uniform(0.0, 2 * np.pi, size=4),
                rng.uniform(0.5, 1.0, size=4),
            ]
        ),
        "th_pattern": np.column_stack(
            [
                rng.uniform(3.0, 8.0, size=3),
                rng.uniform(0.0, np.pi, size=3),
                rng.uniform(0.0, 2 * np.pi, size=3),
                rng.uniform(0.5, 1.0, size=3),
            ]
        ),
    }


def _pose(rng):
    return {
        "shift": rng.uniform(-0.03, 0.03, size=2),
        "angle": rng.uniform(-0.10, 0.10),
        "scale": rng.uniform(0.96, 1.04),
    }


def _canonical_coords(h, w, pose):
    """Grid coordinates pulled back through the pose transform."""
    Y, X = _unit_grid(h, w)
    cy, cx = 0.5, 0.5
    y = Y - cy - pose["shift"][0]
    x = X - cx - pose["shift"][1]
    c, s = np.cos(-pose["angle"]), np.sin(-pose["angle"])
    yr = (c * y - s * x) / pose["scale"] + cy
    xr = (s * y + c * x) / pose["scale"] + cx
    return yr, xr


def _silhouette(geo, Y, X):
    """Boolean hand mask plus per-pixel finger-tip progress in [0, 1]."""
    cy, cx = geo["palm_c"]
    by, bx = geo["palm_ab"]
    mask = ((Y - cy) / by) ** 2 + ((X - cx) / bx) ** 2 <= 1.0
    progress = np.zeros_like(Y)
    for angle, length, width in zip(geo["angles"], geo["lengths"], geo["widths"]):
        d = np.array([-np.cos(angle), np.sin(angle)])
        edge = 1.0 / np.hypot(d[0] / by, d[1] / bx)
        p0 = geo["palm_c"] + d * (0.80 * edge)
        qy, qx = Y - p0[0], X - p0[1]
        t = np.clip((qy * d[0] + qx * d[1]) / length, 0.0, 1.0)
        dist = np.hypot(qy - t * length * d[0], qx - t * length * d[1])
        inside = dist <= width
        mask |= inside
        progress = np.maximum(progress, np.where(inside, t, 0.0))
    return mask, progress


def _sinusoid_bank(bank, Y, X, amplitude):
    out = np.zeros_like(Y)
    for freq, theta, phase, share in bank:
        out += share * np.sin(
            2 * np.pi * freq * (np.cos(theta) * Y + np.sin(theta) * X) + phase
        )
    return amplitude * out / len(bank)


def _session_offset(session, sessions):
    if sessions == 1:
        return 0.0
    return _SESSION_OFFSET * (2.0 * (session - 1) / (sessions - 1) - 1.0)


def _quantize(img, levels):
    return np.round(np.clip(img, 0.0, 1.0) * levels) / levels


def _render_real_rgb(geo, app, pose, rng, h, w):
    Yc, Xc = _canonical_coords(h, w, pose)
    mask, _ = _silhouette(geo, Yc, Xc)
    Y, X = _unit_grid(h, w)
    grad_dir = rng.uniform(0.0, 2 * np.pi)
    bg = (
        _RGB_BG_BASE
        + rng.uniform(-0.08, 0.08)
        + 0.06 * (np.cos(grad_dir) * Y + np.sin(grad_dir) * X)
        + 0.10 * gaussian_filter(rng.normal(size=(h, w)), 6.0)
    )
    bg = np.stack([bg * rng.uniform(0.92, 1.08) for _ in range(3)], axis=-1)
    texture = _sinusoid_bank(app["texture"], Yc, Xc, _RGB_TEXTURE_AMP)
    hand = app["skin"][None, None, :] + texture[..., None]
    soft = gaussian_filter(mask.astype(np.float64), 0.8)[..., None]
    img = bg * (1.0 - soft) + hand * soft
    img += rng.normal(0.0, _RGB_NOISE, size=img.shape)
    return _quantize(img, 255), mask


def _render_real_th(geo, app, pose, session, sessions, rng, h, w):
    Yc, Xc = _canonical_coords(h, w, pose)
    mask, progress = _silhouette(geo, Yc, Xc)
    Y, X = _unit_grid(h, w)
    grad_dir = rng.uniform(0.0, 2 * np.pi)
    bg = _TH_BACKGROUND + _TH_BG_GRADIENT * (np.cos(grad_dir) * Y + np.sin(grad_dir) * X)
    temp = (
        _PALM_TEMP
        - _FINGER_COOLING * progress
        + _sinusoid_bank(app["th_pattern"], Yc, Xc, _TH_PATTERN_AMP)
        + _session_offset(session, sessions)
    )
    field = np.where(mask, temp, bg)
    field = gaussian_filter(field, _TH_BLUR)
    field += rng.normal(0.0, _TH_NOISE, size=field.shape)
    img = _quantize(field, 65535)
    stats = _th_stats(img, mask)
    return img[..., None], mask, stats


def _th_stats(img, silhouette):
    """Warmth and overlap statistics of a final single-channel image."""
    inside = float(img[silhouette].mean())
    outside = float(img[~silhouette].mean())
    heat = img >= (inside + outside) / 2.0
    return {
        "inside_mean": inside,
        "outside_mean": outside,
        "silhouette_heat_iou": _iou(silhouette, heat),
    }


def _iou(a, b):
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def _render_fake_rgb(source_rgb, rng, h, w):
    alpha = rng.uniform(*_PRINT_FLATTEN)
    img = alpha * source_rgb + (1.0 - alpha) * 0.85
    # alternating-pixel dot screen standing in for the print raster
    halftone = rng.uniform(*_HALFTONE_AMP) * (
        np.cos(np.pi * np.arange(h))[:, None] * np.cos(np.pi * np.arange(w))[None, :]
    )
    img = img + halftone[..., None]
    border = rng.integers(_BORDER_PX[0], _BORDER_PX[1] + 1)
    paper = rng.uniform(*_PAPER_TONE)
    frame = np.zeros((h, w), dtype=bool)
    frame[:border] = frame[-border:] = True
    frame[:, :border] = frame[:, -border:] = True
    img = np.where(frame[..., None], paper + rng.normal(0.0, 0.01, size=(h, w, 1)), img)
    img += rng.normal(0.0, _RGB_NOISE, size=img.shape)
    return _quantize(img, 255)


def _render_fake_th(printed_mask, attacker_geo, attacker_pose, rng, h, w):
    Yc, Xc = _canonical_coords(h, w, attacker_pose)
    attacker_mask, progress = _silhouette(attacker_geo, Yc, Xc)
    Y, X = _unit_grid(h, w)
    grad_dir = rng.uniform(0.0, 2 * np.pi)
    bg = _TH_BACKGROUND + _TH_BG_GRADIENT * (np.cos(grad_dir) * Y + np.sin(grad_dir) * X)
    blob = np.where(attacker_mask, _BLOB_TEMP - 0.04 * progress, bg)
    blob = gaussian_filter(blob, _BLOB_BLUR)
    # the sheet blocks part of the long-wave signal behind it; its edge
    # stays sharp because the paper sits right in front of the sensor
    margins = rng.uniform(*_SHEET_MARGIN, size=4)
    sheet = (
        (Y >= margins[0])
        & (Y <= 1.0 - margins[1])
        & (X >= margins[2])
        & (X <= 1.0 - margins[3])
    )
    seen = np.where(sheet, (1.0 - _SHEET_ATTEN) * blob + _SHEET_ATTEN * _SHEET_TEMP, blob)
    field = seen + rng.normal(0.0, _TH_NOISE, size=(h, w))
    img = _quantize(field, 65535)
    stats = _fake_th_stats(img, printed_mask, attacker_mask)
    return img[..., None], stats


def _fake_th_stats(img, printed_mask, attacker_mask):
    covered = np.logical_or(printed_mask, attacker_mask)
    inside = float(img[attacker_mask].mean()) if attacker_mask.any() else 0.0
    outside = float(img[~covered].mean()) if (~covered).any() else 0.0
    heat = img >= (inside + outside) / 2.0
    return {
        "inside_mean": inside,
        "outside_mean": outside,
        "silhouette_heat_iou": _iou(printed_mask, heat),
    }


def _attacker_pose(rng):
    shift_mag = rng.uniform(*_ATTACK_SHIFT)
    shift_dir = rng.uniform(0.0, 2 * np.pi)
    return {
        "shift": shift_mag * np.array([np.cos(shift_dir), np.sin(shift_dir)]),
        "angle": rng.uniform(-_ATTACK_ROT, _ATTACK_ROT),
        "scale": rng.uniform(*_ATTACK_SCALE),
    }


def generate_synthetic_dataset(params: SyntheticParams) -> Dataset:
    """Produce a paired RGB+TH dataset of real and fake hand images.

    Classes are numbered 2*subject + hand (left=0, right=1); subjects are
    1-based.  Fake captures reference a real capture of the same class as
    the printed source.  generator_info maps each TH sample_id to warmth and
    silhouette/heat-overlap statistics, plus the fake's source sample.
    """
    h, w = params.image_size
    seed = params.rng_seed
    samples = []
    info = {}
    for subject in range(1, params.num_subjects + 1):
        for hand_index, hand in enumerate(("left", "right")):
            class_id = 2 * (subject - 1) + hand_index
            geo = _hand_geometry(derive_rng(seed, _TAG_GEOMETRY, class_id), hand)
            app = _appearance(derive_rng(seed, _TAG_APPEARANCE, class_id))
            real_rgb = []
            real_masks = []
            for j in range(params.images_per_class_per_modality):
                session = j % params.sessions + 1
                pose = _pose(derive_rng(seed, _TAG_POSE, class_id, j))
                pair = f"s{subject:03d}-{hand}-r{j:02d}"
                rgb, _ = _render_real_rgb(
                    geo, app, pose, derive_rng(seed, _TAG_RGB_NOISE, class_id, j), h, w
                )
                th, mask, th_stats = _render_real_th(
                    geo,
                    app,
                    pose,
                    session,
                    params.sessions,
                    derive_rng(seed, _TAG_TH_NOISE, class_id, j),
                    h,
                    w,
                )
                common = dict(
                    subject_id=subject,
                    hand_side=hand,
                    authenticity="real",
                    session=session,
                    class_id=class_id,
                    pair_id=pair,
                )
                samples.append(Sample(f"{pair}-rgb", modality="RGB", image=rgb, **common))
                samples.append(Sample(f"{pair}-th", modality="TH", image=th, **common))
                info[f"{pair}-th"] = th_stats
                real_rgb.append(rgb)
                real_masks.append(mask)
            for j in range(params.fake_images_per_class):
                src = j % params.images_per_class_per_modality
                session = j % params.sessions + 1
                pair = f"s{subject:03d}-{hand}-f{j:02d}"
                print_rng = derive_rng(seed, _TAG_PRINT, class_id, j)
                fake_rgb = _render_fake_rgb(real_rgb[src], print_rng, h, w)
                attacker_rng = derive_rng(seed, _TAG_ATTACKER, class_id, j)
                attacker_geo = _hand_geometry(
                    attacker_rng, "left" if attacker_rng.uniform() < 0.5 else "right"
                )
                # fingers curl around the held printout, so the warm mass
                # behind the paper never shows an open five-finger spread
                attacker_geo["lengths"] *= attacker_rng.uniform(*_ATTACK_CURL)
                attacker_geo["widths"] *= 1.15
                fake_th, fake_stats = _render_fake_th(
                    real_masks[src],
                    attacker_geo,
                    _attacker_pose(attacker_rng),
                    attacker_rng,
                    h,
                    w,
                )
                common = dict(
                    subject_id=subject,
                    hand_side=hand,
                    authenticity="fake",
                    session=session,
                    class_id=FAKE_CLASS_ID,
                    pair_id=pair,
                )
                samples.append(
                    Sample(f"{pair}-rgb", modality="RGB", image=fake_rgb, **common)
                )
                samples.append(
                    Sample(f"{pair}-th", modality="TH", image=fake_th, **common)
                )
                fake_stats = dict(fake_stats, source_sample_id=f"s{subject:03d}-{hand}-r{src:02d}-th")
                info[f"{pair}-th"] = fake_stats
    return build_dataset(samples, info)
