"""Response aggregation over random warps and the self-labeling loop.

The core operation runs a detector on many homographic warps of one image,
un-warps every response map, and averages them.  Border pixels are divided
by the number of warps that actually covered them, not blindly by the warp
count, so the average is unbiased everywhere it is defined and reduces to
the uniform mean in the interior.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .classical import heatmap_to_points
from .evalsuite import repeatability
from .imaging import resize_bilinear
from .synthdata import write_points


@dataclass(frozen=True)
class AdaptConfig:
    n_homographies: int = 100
    ranges: geo.HomographyRanges = field(default_factory=lambda: geo.ranges_preset("adaptation"))
    detect_threshold: float = 0.015
    nms_radius: float = 4.0
    scales: tuple = (1.0,)
    scale_weights: tuple | None = None  # None = proportional to scale
    mask_erosion: int = 8  # px; see adapt()

    def __post_init__(self):
        if self.n_homographies < 1:
            raise ValueError("need at least one homography (the identity)")
        if list(self.scales) != sorted(self.scales, reverse=True):
            raise ValueError("scales must be sorted descending")
        if self.scale_weights is not None and len(self.scale_weights) != len(self.scales):
            raise ValueError("one weight per scale")
        if self.mask_erosion < 0:
            raise ValueError("mask_erosion must be >= 0")

    def weights(self) -> np.ndarray:
        if self.scale_weights is None:
            w = np.asarray(self.scales, dtype=np.float64)
        else:
            w = np.asarray(self.scale_weights, dtype=np.float64)
        return w / w.sum()


def _erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """4-neighbor binary erosion applied radius times."""
    m = mask.copy()
    for _ in range(radius):
        e = m.copy()
        e[1:, :] &= m[:-1, :]
        e[:-1, :] &= m[1:, :]
        e[:, 1:] &= m[:, :-1]
        e[:, :-1] &= m[:, 1:]
        m = e
    return m


def adapt(detector, img: np.ndarray, cfg: AdaptConfig, seed: int = 0) -> np.ndarray:
    """Average detector responses over n_homographies warps (identity first).

    Responses within ``mask_erosion`` px of a warp's validity border are
    discarded: the detector computed them from padding, and the boundary
    itself is an artificial edge that would otherwise inject spurious
    corners right on the image border.  Each pixel is then normalized by
    the count of warps that actually covered it; never-covered pixels stay
    0.  With n_homographies=1 the output is the base detector's map,
    bitwise.
    """
    img = np.asarray(img, dtype=np.float32)
    base = np.asarray(detector(img), dtype=np.float32)
    if cfg.n_homographies == 1:
        return base
    accum = base.astype(np.float64)
    count = np.ones(img.shape, dtype=np.float64)
    for i in range(1, cfg.n_homographies):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x4D, i)))
        h = geo.to_pixel_frame(geo.sample_homography(cfg.ranges, rng), img.shape)
        hinv = geo.invert(h)
        warped, fwd_mask = geo.warp_image(img, h)
        response = np.asarray(detector(warped), dtype=np.float32)
        valid = _erode(fwd_mask, cfg.mask_erosion)
        response = np.where(valid, response, 0.0)
        back, back_mask = geo.warp_image(response, hinv)
        cover_f, cover_m = geo.warp_image(valid.astype(np.float32), hinv)
        covered = back_mask & cover_m & (cover_f >= 1.0 - 1e-6)
        accum += np.where(covered, back, 0.0)
        count += covered
    out = accum / count
    return out.astype(np.float32)


def _round8(x: float) -> int:
    return max(8, int(round(x / 8.0)) * 8)


def adapt_multiscale(detector, img: np.ndarray, cfg: AdaptConfig, seed: int = 0) -> np.ndarray:
    """Within-scale averaging, across-scale weighted maximum.

    Each scale resizes the image (dimensions snapped to multiples of 8),
    runs adapt, and upsamples the result; the outputs combine by the
    weighted elementwise maximum, higher resolutions carrying more weight.
    """
    hgt, wdt = img.shape
    weights = cfg.weights()
    out = None
    for k, s in enumerate(cfg.scales):
        if s == 1.0:
            scaled = img
        else:
            scaled = resize_bilinear(img, (_round8(hgt * s), _round8(wdt * s)))
        # all scales share the warp sequence (unit-frame draws, so they apply
        # cleanly at any resolution); identical scales yield identical maps
        hm = adapt(detector, scaled, cfg, seed=seed)
        if hm.shape != (hgt, wdt):
            hm = resize_bilinear(hm, (hgt, wdt))
        layer = weights[k] * hm
        out = layer if out is None else np.maximum(out, layer)
    return out.astype(np.float32)


def covariance_repeatability(detector, img: np.ndarray, h: np.ndarray, eps: float, k: int,
                             nms_radius: float = 4.0) -> float:
    """Detect top-k on the image and its warp; score how covariantly the
    detector behaved under that homography."""
    warped, _ = geo.warp_image(img, h)
    pts1 = heatmap_to_points(np.asarray(detector(img)), -np.inf, nms_radius, k)
    pts2 = heatmap_to_points(np.asarray(detector(warped)), -np.inf, nms_radius, k)
    return repeatability(pts1, pts2, h, img.shape, eps)


def self_label(images, detector, cfg: AdaptConfig, rounds: int, retrain=None,
               out_dir=None, seed: int = 0, top_k: int = 0):
    """Iterative pseudo-labeling: adapt-aggregate, threshold, optionally retrain.

    Per round every image is labeled from the adapted heatmap of the current
    detector; when ``retrain`` is given (callable(labeled_dataset, round) ->
    new detector) the freshly trained detector drives the next round.
    Returns a list of (labels, detector) per round; label directories
    ``round_R`` with one .pts per image plus meta.txt go under out_dir.
    """
    images = list(images)
    if not images:
        raise ValueError("no images to label")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    history = []
    current = detector
    for r in range(1, rounds + 1):
        labels = []
        for i, img in enumerate(images):
            hm = adapt(current, img, cfg, seed=int(np.random.SeedSequence((seed, 0x6F, r, i)).generate_state(1)[0]))
            labels.append(heatmap_to_points(hm, cfg.detect_threshold, cfg.nms_radius, top_k))
        if out_dir is not None:
            rdir = os.path.join(out_dir, f"round_{r}")
            os.makedirs(rdir, exist_ok=True)
            for i, pts in enumerate(labels):
                write_points(os.path.join(rdir, f"{i:06d}.pts"), pts)
            with open(os.path.join(rdir, "meta.txt"), "w") as f:
                f.write(f"n_homographies={cfg.n_homographies}\n")
                f.write(f"seed={seed}\n")
                f.write(f"threshold={cfg.detect_threshold}\n")
                f.write(f"nms_radius={cfg.nms_radius}\n")
        if retrain is not None:
            current = retrain(list(zip(images, labels)), r)
        history.append((labels, current))
    return history
