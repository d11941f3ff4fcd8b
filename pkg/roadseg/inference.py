"""Streaming inference with extractor-selection policies and FPS profiling."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .architecture import ExtractorKind, MemoryState, forward_frame
from .exceptions import ArgumentError
from .layers import ModelParams
from .tensor import Tensor, no_grad
from .utils.prng import SplitMix64

logger = logging.getLogger(__name__)

Frame = Union[Tensor, np.ndarray]

class PolicyKind(str, enum.Enum):

    RAND_THRESHOLD = "randn"
    ONE_IN_N = "one-in"
    ALWAYS_FAST = "always-fast"
    ALWAYS_SLOW = "always-slow"

@dataclass(frozen=True)
class Policy:

    """Inference-time extractor selection rule."""

    kind: PolicyKind
    theta: float = 0.9
    n: int = 10
    clear_on_slow: bool = True
    seed: int = 0

    def __post_init__(self) -> None:

        if self.kind is PolicyKind.ONE_IN_N and (not isinstance(self.n, int) or self.n < 1):

            raise ArgumentError(f"one-in:N needs N >= 1, got {self.n!r}.")

        if self.kind is PolicyKind.RAND_THRESHOLD and not 0.0 <= self.theta <= 1.0:

            raise ArgumentError(f"randn:THETA needs THETA in [0, 1], got {self.theta!r}.")

    @classmethod
    def one_in(cls, n: int, **options) -> "Policy":

        return cls(PolicyKind.ONE_IN_N, n=n, **options)

    @classmethod
    def rand_threshold(cls, theta: float, **options) -> "Policy":

        return cls(PolicyKind.RAND_THRESHOLD, theta=theta, **options)

    @classmethod
    def always_fast(cls, **options) -> "Policy":

        return cls(PolicyKind.ALWAYS_FAST, **options)

    @classmethod
    def always_slow(cls, **options) -> "Policy":

        return cls(PolicyKind.ALWAYS_SLOW, **options)

    @classmethod
    def parse(cls, text: str, **options) -> "Policy":

        """Parse "always-fast", "always-slow", "one-in:N" or "randn:THETA"."""

        name, _, argument = text.strip().partition(":")

        try:

            kind = PolicyKind(name)

        except ValueError:

            raise ArgumentError(f"Unknown policy {text!r}; expected always-fast, always-slow, one-in:N or randn:THETA.")

        if kind in (PolicyKind.ALWAYS_FAST, PolicyKind.ALWAYS_SLOW):

            if argument:

                raise ArgumentError(f"Policy {name} takes no argument.")

            return cls(kind, **options)

        try:

            if kind is PolicyKind.ONE_IN_N:

                return cls.one_in(int(argument), **options)

            theta = float(argument)

        except ValueError:

            raise ArgumentError(f"Malformed policy {text!r}.")

        if not math.isfinite(theta):

            raise ArgumentError(f"Malformed policy {text!r}.")

        return cls.rand_threshold(theta, **options)

    @property
    def label(self) -> str:

        if self.kind is PolicyKind.ONE_IN_N:

            return f"one-in-{self.n}"

        if self.kind is PolicyKind.RAND_THRESHOLD:

            return f"randn>{self.theta:g}"

        return self.kind.value

    def make_rng(self) -> SplitMix64:

        return SplitMix64(self.seed)

def decide(policy: Policy, frame_index: int, rng: Optional[SplitMix64]) -> ExtractorKind:

    """Pick the extractor for one frame.

    The interleaving policies always run Slow on frame 0 to seed the memory.
    RandThreshold draws only on frames it actually decides; OneInN never draws.
    """

    if policy.kind is PolicyKind.ALWAYS_FAST:

        return ExtractorKind.FAST

    if policy.kind is PolicyKind.ALWAYS_SLOW or frame_index == 0:

        return ExtractorKind.SLOW

    if policy.kind is PolicyKind.ONE_IN_N:

        return ExtractorKind.SLOW if frame_index % policy.n == 0 else ExtractorKind.FAST

    if rng is None:

        raise ArgumentError("randn policies need a PRNG stream.")

    return ExtractorKind.SLOW if rng.random() > policy.theta else ExtractorKind.FAST

@dataclass(frozen=True)
class ScheduleEntry:

    frame_index: int
    kind: ExtractorKind
    cleared: bool
    latency_s: float

@dataclass
class Schedule:

    """Realized per-frame decisions of one stream."""

    entries: List[ScheduleEntry] = field(default_factory=list)

    def __len__(self) -> int:

        return len(self.entries)

    def append(self, entry: ScheduleEntry) -> None:

        self.entries.append(entry)

    def extend(self, other: "Schedule") -> None:

        self.entries.extend(other.entries)

    @property
    def slow_count(self) -> int:

        return sum(1 for entry in self.entries if entry.kind is ExtractorKind.SLOW)

    @property
    def clear_count(self) -> int:

        return sum(1 for entry in self.entries if entry.cleared)

    @property
    def latencies(self) -> List[float]:

        return [entry.latency_s for entry in self.entries]

    def decisions(self) -> List[Tuple[int, ExtractorKind, bool]]:

        """Entries without timing, for replay comparisons."""

        return [(entry.frame_index, entry.kind, entry.cleared) for entry in self.entries]

def run_stream(
    frames: Sequence[Frame],
    params: ModelParams,
    policy: Policy,
    rng: Optional[SplitMix64] = None,
    on_clear: Optional[Callable[[int, MemoryState], None]] = None,
    clock: Callable[[], float] = time.perf_counter,
) -> Tuple[List[np.ndarray], Schedule]:

    """Run one stream from a zero memory and return road probabilities per frame.

    On a Slow frame with ``clear_on_slow`` the memory is zeroed before the
    forward pass. Latency covers forward_frame only.
    """

    if not len(frames):

        raise ArgumentError("run_stream needs at least one frame.")

    rng = rng if rng is not None else policy.make_rng()
    state = MemoryState.zeros(params.arch)
    schedule = Schedule()
    masks: List[np.ndarray] = []

    with no_grad():

        for index, frame in enumerate(frames):

            kind = decide(policy, index, rng)
            cleared = kind is ExtractorKind.SLOW and policy.clear_on_slow
            image = frame if isinstance(frame, Tensor) else Tensor(frame)

            if cleared:

                state.clear()

                if on_clear is not None:

                    on_clear(index, state)

            started = clock()
            logits, state = forward_frame(image, kind, state, params)
            latency = clock() - started

            masks.append(logits.sigmoid().data)
            schedule.append(ScheduleEntry(index, kind, cleared, latency))

    logger.debug(
        "Stream of %d frame(s) under %s: %d slow, %d clear(s)",
        len(schedule), policy.label, schedule.slow_count, schedule.clear_count,
    )

    return masks, schedule

def fps_from_latencies(latencies: Sequence[float], warmup: int = 0) -> float:

    if not 0 <= warmup < len(latencies):

        raise ArgumentError(f"warmup must lie in [0, {len(latencies)}), got {warmup}.")

    measured = math.fsum(latencies[warmup:])

    return (len(latencies) - warmup) / max(measured, 1e-12)

def profile_fps(
    frames: Sequence[Frame],
    params: ModelParams,
    policy: Policy,
    warmup: int = 0,
    clock: Callable[[], float] = time.perf_counter,
) -> float:

    """Frames per second over the frames after ``warmup``."""

    if not 0 <= warmup < len(frames):

        raise ArgumentError(f"warmup must be smaller than the number of frames ({len(frames)}), got {warmup}.")

    _, schedule = run_stream(frames, params, policy, clock=clock)

    return fps_from_latencies(schedule.latencies, warmup)
