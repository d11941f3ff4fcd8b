"""Procedural road-video sequences with ground-truth masks."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ArgumentError, GenerationError
from .utils.prng import SplitMix64

logger = logging.getLogger(__name__)

ROAD_RGB = (0.5, 0.5, 0.5)
GROUND_RGB = (0.36, 0.42, 0.2)
SKY_RGB = (0.62, 0.78, 0.92)

MIN_ROAD_FRACTION = 0.05
MAX_ROAD_FRACTION = 0.7
MIN_CONSECUTIVE_IOU = 0.6

@dataclass(frozen=True)
class SceneParams:

    seed: int = 42
    num_sequences: int = 10
    frames_per_sequence: int = 30
    image_size: int = 64
    curvature_ar_coeff: float = 0.9
    curvature_noise_std: float = 0.05
    lateral_drift_std: float = 0.01
    road_base_width: float = 0.45
    perspective_taper: float = 0.8
    horizon_fraction: float = 0.35
    noise_amplitude: float = 0.08
    initial_curvature: float = 0.0
    initial_offset: float = 0.5
    max_retries: int = 100

    def __post_init__(self) -> None:

        if self.num_sequences < 0 or self.frames_per_sequence < 1 or self.image_size < 2:

            raise ArgumentError("num_sequences >= 0, frames_per_sequence >= 1 and image_size >= 2 are required.")

        for name in ("curvature_noise_std", "lateral_drift_std", "road_base_width", "noise_amplitude"):

            if getattr(self, name) < 0:

                raise ArgumentError(f"{name} must be >= 0.")

        if not 0 <= self.curvature_ar_coeff < 1:

            raise ArgumentError("curvature_ar_coeff must lie in [0, 1).")

        if not 0 < self.horizon_fraction < 1:

            raise ArgumentError("The horizon must lie inside the image.")

        if not 0 <= self.perspective_taper <= 1:

            raise ArgumentError("perspective_taper must lie in [0, 1].")

        if self.max_retries < 1:

            raise ArgumentError("max_retries must be >= 1.")

    @property
    def horizon_row(self) -> float:

        return self.horizon_fraction * self.image_size

@dataclass
class SequenceSample:

    """T frames [T,3,H,W] in [0,1] with binary masks [T,1,H,W]."""

    frames: np.ndarray
    masks: np.ndarray
    seed: Optional[int] = None
    index: int = 0
    flipped: bool = False

    def __post_init__(self) -> None:

        if self.frames.ndim != 4 or self.frames.shape[1] != 3:

            raise ArgumentError(f"frames must be [T,3,H,W], got {self.frames.shape}.")

        expected = (self.frames.shape[0], 1) + self.frames.shape[2:]

        if self.masks.shape != expected:

            raise ArgumentError(f"masks must be {expected}, got {self.masks.shape}.")

    @property
    def length(self) -> int:

        return self.frames.shape[0]

    @property
    def image_size(self) -> int:

        return self.frames.shape[2]

    def road_fractions(self) -> np.ndarray:

        return self.masks.reshape(self.length, -1).mean(axis=1)

    def consecutive_ious(self) -> List[float]:

        from .metrics import iou

        return [iou(self.masks[t], self.masks[t + 1]) for t in range(self.length - 1)]

    def violations(self) -> List[str]:

        """Reasons this sample breaks the generator's contract (empty when valid)."""

        problems = []

        if not np.isin(self.masks, (0.0, 1.0)).all():

            problems.append("mask is not binary")

        fractions = self.road_fractions()

        if fractions.min() < MIN_ROAD_FRACTION or fractions.max() > MAX_ROAD_FRACTION:

            problems.append(f"road fraction {fractions.min():.3f}..{fractions.max():.3f} outside [{MIN_ROAD_FRACTION}, {MAX_ROAD_FRACTION}]")

        ious = self.consecutive_ious()

        if ious and math.fsum(ious) / len(ious) < MIN_CONSECUTIVE_IOU:

            problems.append(f"mean consecutive mask IoU {math.fsum(ious) / len(ious):.3f} below {MIN_CONSECUTIVE_IOU}")

        return problems

    def flip(self) -> "SequenceSample":

        return replace(
            self,
            frames=np.ascontiguousarray(self.frames[..., ::-1]),
            masks=np.ascontiguousarray(self.masks[..., ::-1]),
            flipped=not self.flipped,
        )

def _road_band(params: SceneParams, curvature: float, offset: float) -> np.ndarray:

    size = params.image_size
    horizon = params.horizon_row
    rows = np.arange(size, dtype=np.float64)
    columns = np.arange(size, dtype=np.float64) + 0.5
    span = size - horizon

    depth = (rows - horizon) / span
    center = offset * size + curvature * depth ** 2 * size
    half_width = params.road_base_width * size / 2 * (1 - params.perspective_taper * (size - rows) / span)
    inside = np.abs(columns[None, :] - center[:, None]) <= half_width[:, None]

    return inside & (rows > horizon)[:, None]

def _render_sequence(params: SceneParams, index: int, rng: SplitMix64) -> SequenceSample:

    size, length = params.image_size, params.frames_per_sequence
    texture = (rng.uniform_array((3, size, size)) * 2.0 - 1.0) * params.noise_amplitude
    sky = (np.arange(size) <= params.horizon_row)[:, None]

    background = np.where(sky[None], np.array(SKY_RGB)[:, None, None], np.array(GROUND_RGB)[:, None, None])
    road = np.broadcast_to(np.array(ROAD_RGB)[:, None, None], (3, size, size))

    frames = np.empty((length, 3, size, size), dtype=np.float32)
    masks = np.empty((length, 1, size, size), dtype=np.float32)
    curvature, offset = params.initial_curvature, params.initial_offset

    for t in range(length):

        if t > 0:

            curvature = params.curvature_ar_coeff * curvature + params.curvature_noise_std * rng.normal()
            offset = offset + params.lateral_drift_std * rng.normal()

        band = _road_band(params, curvature, offset)
        image = np.where(band[None], road, background) + texture

        frames[t] = np.clip(image, 0.0, 1.0)
        masks[t, 0] = band

    return SequenceSample(frames=frames, masks=masks, seed=params.seed, index=index)

def generate_sequence(params: SceneParams, index: int) -> SequenceSample:

    """Render sequence ``index``, resampling until it satisfies the contract."""

    rng = SplitMix64(params.seed).derive(index)
    problems: List[str] = []

    for attempt in range(params.max_retries):

        sample = _render_sequence(params, index, rng)
        problems = sample.violations()

        if not problems:

            return sample

        logger.debug("Resampling sequence %d after attempt %d: %s", index, attempt + 1, "; ".join(problems))

    raise GenerationError(
        f"Sequence {index} still violates its invariants after {params.max_retries} attempts: {'; '.join(problems)}",
        params=params,
        sequence_index=index,
    )

def generate(params: SceneParams, workers: int = 1) -> List[SequenceSample]:

    """All sequences, in index order; per-sequence streams make workers safe."""

    indices = range(params.num_sequences)

    if workers > 1:

        with ThreadPoolExecutor(max_workers=workers) as pool:

            samples = list(pool.map(lambda index: generate_sequence(params, index), indices))

    else:

        samples = [generate_sequence(params, index) for index in indices]

    logger.info(
        "Generated %d sequence(s) of %d frame(s) at %dx%d (seed %d)",
        len(samples), params.frames_per_sequence, params.image_size, params.image_size, params.seed,
    )

    return samples

def flip_augment(samples: Sequence[SequenceSample]) -> List[SequenceSample]:

    """Input followed by its horizontally mirrored copies."""

    return list(samples) + [sample.flip() for sample in samples]

def split_sequences(samples: Sequence[SequenceSample], val_fraction: float) -> Tuple[List[SequenceSample], List[SequenceSample]]:

    """Split by sequence order: the last round(n * val_fraction) sequences validate."""

    if not 0 <= val_fraction < 1:

        raise ArgumentError(f"val_fraction must lie in [0, 1), got {val_fraction}.")

    held_out = int(round(len(samples) * val_fraction))
    cut = len(samples) - held_out

    return list(samples[:cut]), list(samples[cut:])
