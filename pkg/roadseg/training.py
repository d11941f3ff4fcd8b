"""Batched and sequential interleaved training with last-frame loss."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .architecture import ArchitectureConfig, ExtractorKind, MemoryState, forward_frame
from .datagen import SequenceSample
from .exceptions import ArgumentError
from .layers import AdamState, ModelParams, adam_step, init_params
from .tensor import Tensor, bce_with_logits, no_grad
from .utils.prng import SplitMix64

logger = logging.getLogger(__name__)

TrainingStep = Tuple[np.ndarray, np.ndarray]
SequenceHook = Callable[[MemoryState], None]
EpochHook = Callable[[int, float, ModelParams], None]

class Pipeline(str, enum.Enum):

    BATCHED = "batched"
    SEQUENTIAL = "sequential"

@dataclass(frozen=True)
class TrainConfig:

    pipeline: Pipeline = Pipeline.SEQUENTIAL
    seq_len: int = 6
    p_slow_train: float = 0.7
    epochs: int = 30
    lr: float = 1e-3
    seed: int = 42
    clip_norm: Optional[float] = None

    def __post_init__(self) -> None:

        object.__setattr__(self, "pipeline", Pipeline(self.pipeline))

        if self.seq_len < 2:

            raise ArgumentError(f"seq_len must be >= 2, got {self.seq_len}.")

        if not 0.0 <= self.p_slow_train <= 1.0:

            raise ArgumentError(f"p_slow must lie in [0, 1], got {self.p_slow_train}.")

        if self.epochs < 0:

            raise ArgumentError(f"epochs must be >= 0, got {self.epochs}.")

        if self.lr <= 0:

            raise ArgumentError(f"lr must be positive, got {self.lr}.")

        if self.clip_norm is not None and self.clip_norm <= 0:

            raise ArgumentError(f"clip_norm must be positive, got {self.clip_norm}.")

@dataclass
class TrainResult:

    params: ModelParams
    epoch_losses: List[float] = field(default_factory=list)
    windows_per_epoch: int = 0

def sample_extractor(rng: SplitMix64, p_slow: float) -> ExtractorKind:

    return ExtractorKind.SLOW if rng.random() < p_slow else ExtractorKind.FAST

def make_training_sequence(sample: SequenceSample, pipeline: Pipeline, start: int, seq_len: int = 6) -> List[TrainingStep]:

    """Batched repeats frame ``start`` seq_len times; Sequential takes frames start..start+seq_len-1."""

    pipeline = Pipeline(pipeline)

    if pipeline is Pipeline.BATCHED:

        if not 0 <= start < sample.length:

            raise ArgumentError(f"Frame {start} is outside a {sample.length}-frame sequence.")

        return [(sample.frames[start], sample.masks[start])] * seq_len

    if start < 0 or start + seq_len > sample.length:

        raise ArgumentError(f"Window {start}..{start + seq_len - 1} is outside a {sample.length}-frame sequence.")

    return [(sample.frames[t], sample.masks[t]) for t in range(start, start + seq_len)]

def window_starts(length: int, seq_len: int) -> range:

    """Non-overlapping window starts stepping by seq_len."""

    return range(0, length - seq_len + 1, seq_len)

def training_windows(samples: Sequence[SequenceSample], pipeline: Pipeline, seq_len: int) -> List[Tuple[int, int]]:

    """(sequence index, frame) pairs for one epoch, before shuffling.

    Batched yields every frame of every sequence; Sequential yields the
    starts of non-overlapping seq_len windows.
    """

    pipeline = Pipeline(pipeline)
    windows: List[Tuple[int, int]] = []

    for index, sample in enumerate(samples):

        if pipeline is Pipeline.BATCHED:

            windows.extend((index, frame) for frame in range(sample.length))
            continue

        if sample.length < seq_len:

            raise ArgumentError(f"Sequence {index} has {sample.length} frames; seq_len is {seq_len}.")

        windows.extend((index, start) for start in window_starts(sample.length, seq_len))

    return windows

def unrolled_loss(
    frames: Sequence[np.ndarray],
    target: np.ndarray,
    kinds: Sequence[ExtractorKind],
    params: ModelParams,
    on_sequence_start: Optional[SequenceHook] = None,
) -> Tensor:

    """BCE of the final frame's logits after threading memory through every frame."""

    if len(frames) != len(kinds):

        raise ArgumentError(f"Got {len(kinds)} extractor choices for {len(frames)} frames.")

    state = MemoryState.zeros(params.arch)

    if on_sequence_start is not None:

        on_sequence_start(state)

    logits = None

    for frame, kind in zip(frames, kinds):

        logits, state = forward_frame(Tensor(frame), kind, state, params)

    return bce_with_logits(logits, target)

def sequence_loss(
    seq: Sequence[TrainingStep],
    params: ModelParams,
    rng: SplitMix64,
    p_slow: float,
    on_sequence_start: Optional[SequenceHook] = None,
) -> Tuple[Tensor, List[ExtractorKind]]:

    kinds = [sample_extractor(rng, p_slow) for _ in seq]
    loss = unrolled_loss([frame for frame, _ in seq], seq[-1][1], kinds, params, on_sequence_start)

    return loss, kinds

def train_sequence(
    seq: Sequence[TrainingStep],
    params: ModelParams,
    opt_state: AdamState,
    rng: SplitMix64,
    p_slow: float,
    clip_norm: Optional[float] = None,
    on_sequence_start: Optional[SequenceHook] = None,
) -> float:

    """One optimizer step over a full unrolled sequence; returns the loss before the step."""

    params.zero_grads()
    loss, kinds = sequence_loss(seq, params, rng, p_slow, on_sequence_start)
    loss.backward()
    norm = adam_step(params, opt_state, clip_norm=clip_norm)
    params.zero_grads()

    logger.debug("step %d loss=%.6f grad_norm=%.4f extractors=%s", opt_state.t, loss.item(), norm, "".join(kind.label[0] for kind in kinds))

    return loss.item()

def train(
    dataset: Sequence[SequenceSample],
    config: TrainConfig,
    params: Optional[ModelParams] = None,
    arch: Optional[ArchitectureConfig] = None,
    on_epoch_end: Optional[EpochHook] = None,
    on_sequence_start: Optional[SequenceHook] = None,
) -> TrainResult:

    """Train for ``config.epochs`` passes over seeded-shuffled windows.

    One PRNG stream seeded by ``config.seed`` drives both the window order
    and the extractor choices.
    """

    if not dataset:

        raise ArgumentError("Training needs a nonempty dataset.")

    if params is None:

        arch = arch or ArchitectureConfig.from_settings(input_size=dataset[0].image_size)
        params = init_params(arch, config.seed)

    rng = SplitMix64(config.seed)
    opt_state = AdamState.create(params, lr=config.lr)
    windows = training_windows(dataset, config.pipeline, config.seq_len)
    result = TrainResult(params=params, windows_per_epoch=len(windows))

    for epoch in range(1, config.epochs + 1):

        order = list(windows)
        rng.shuffle(order)
        losses = []

        for index, start in order:

            seq = make_training_sequence(dataset[index], config.pipeline, start, config.seq_len)
            losses.append(train_sequence(seq, params, opt_state, rng, config.p_slow_train, config.clip_norm, on_sequence_start))

        mean_loss = math.fsum(losses) / len(losses)
        result.epoch_losses.append(mean_loss)

        logger.info("epoch %d/%d: mean_loss=%.6f over %d window(s)", epoch, config.epochs, mean_loss, len(order))

        if on_epoch_end is not None:

            on_epoch_end(epoch, mean_loss, params)

    return result

def validation_loss(dataset: Sequence[SequenceSample], config: TrainConfig, params: ModelParams) -> float:

    """Mean last-frame loss over every window, extractors drawn from a fixed substream."""

    if not dataset:

        raise ArgumentError("Validation needs a nonempty dataset.")

    rng = SplitMix64(config.seed).derive(1)
    losses = []

    with no_grad():

        for index, start in training_windows(dataset, config.pipeline, config.seq_len):

            seq = make_training_sequence(dataset[index], config.pipeline, start, config.seq_len)
            loss, _ = sequence_loss(seq, params, rng, config.p_slow_train)
            losses.append(loss.item())

    return math.fsum(losses) / len(losses)
