"""IoU, temporal consistency and evaluation report rows."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Union

import numpy as np

from .exceptions import ArgumentError, ShapeError
from .inference import Policy, Schedule, fps_from_latencies, run_stream
from .layers import ModelParams
from .tensor import Tensor

if TYPE_CHECKING:

    from .datagen import SequenceSample

logger = logging.getLogger(__name__)

MaskLike = Union[Tensor, np.ndarray]

TC_DENOMINATOR_FLOOR = 1e-6

def _as_array(value: MaskLike) -> np.ndarray:

    return value.data if isinstance(value, Tensor) else np.asarray(value)

def iou(pred: MaskLike, gt: MaskLike, threshold: float = 0.5) -> float:

    """Intersection over union after binarizing both masks at ``> threshold``.

    Two empty masks score 1.0.
    """

    pred, gt = _as_array(pred), _as_array(gt)

    if pred.shape != gt.shape:

        raise ShapeError(f"IoU needs equal shapes, got {pred.shape} and {gt.shape}.")

    p = pred > threshold
    g = gt > threshold
    union = int(np.count_nonzero(p | g))

    if union == 0:

        return 1.0

    return int(np.count_nonzero(p & g)) / union

def _mean(values: Sequence[float]) -> float:

    return math.fsum(values) / len(values)

@dataclass(frozen=True)
class TemporalConsistency:

    value: float
    prediction_iou: float
    ground_truth_iou: float
    degenerate: bool = False

def temporal_consistency(preds: Sequence[MaskLike], gts: Sequence[MaskLike]) -> TemporalConsistency:

    """Consecutive-prediction IoU normalized by consecutive ground-truth IoU.

    A ground-truth mean below 1e-6 leaves the raw prediction mean, flagged
    as degenerate.
    """

    if len(preds) != len(gts):

        raise ArgumentError(f"Got {len(preds)} predictions for {len(gts)} ground-truth masks.")

    if len(preds) < 2:

        raise ArgumentError("Temporal consistency needs at least 2 frames.")

    prediction_iou = _mean([iou(preds[t], preds[t + 1]) for t in range(len(preds) - 1)])
    ground_truth_iou = _mean([iou(gts[t], gts[t + 1]) for t in range(len(gts) - 1)])

    if ground_truth_iou < TC_DENOMINATOR_FLOOR:

        return TemporalConsistency(prediction_iou, prediction_iou, ground_truth_iou, degenerate=True)

    return TemporalConsistency(prediction_iou / ground_truth_iou, prediction_iou, ground_truth_iou)

@dataclass(frozen=True)
class MetricsRow:

    name: str
    strategy: str
    avg_iou: float
    avg_fps: float
    temporal_consistency: float

    def __post_init__(self) -> None:

        if not 0.0 <= self.avg_iou <= 1.0:

            raise ArgumentError(f"avg_iou must lie in [0, 1], got {self.avg_iou}.")

        if not self.avg_fps > 0:

            raise ArgumentError(f"avg_fps must be positive, got {self.avg_fps}.")

        if not self.temporal_consistency >= 0:

            raise ArgumentError(f"temporal_consistency must be >= 0, got {self.temporal_consistency}.")

    def __str__(self) -> str:

        return (
            f"{self.name} [{self.strategy}] avg_iou={self.avg_iou:.4f} "
            f"avg_fps={self.avg_fps:.2f} temporal_consistency={self.temporal_consistency:.4f}"
        )

@dataclass
class EvaluationReport:

    """Everything one evaluation produced; ``row`` is what gets reported."""

    row: MetricsRow
    frame_ious: List[List[float]]
    consistency: List[TemporalConsistency]
    schedules: List[Schedule]
    masks: List[List[np.ndarray]] = field(default_factory=list)

    @property
    def degenerate_sequences(self) -> int:

        return sum(1 for entry in self.consistency if entry.degenerate)

    def combined_schedule(self) -> Schedule:

        combined = Schedule()

        for schedule in self.schedules:

            combined.extend(schedule)

        return combined

def run_evaluation(
    params: ModelParams,
    samples: Sequence["SequenceSample"],
    policy: Policy,
    name: str = "model",
    warmup: int = 0,
    keep_masks: bool = False,
) -> EvaluationReport:

    """Stream every sequence through ``policy`` and aggregate IoU, FPS and TC.

    Memory carries within a sequence and resets between sequences; one policy
    stream serves the whole evaluation. ``warmup`` leading frames of the
    evaluation are left out of the FPS figure.
    """

    if not samples:

        raise ArgumentError("Evaluation needs at least one sequence.")

    rng = policy.make_rng()
    frame_ious: List[List[float]] = []
    consistency: List[TemporalConsistency] = []
    schedules: List[Schedule] = []
    kept: List[List[np.ndarray]] = []
    latencies: List[float] = []

    for sample in samples:

        masks, schedule = run_stream(list(sample.frames), params, policy, rng=rng)
        ious = [iou(masks[t], sample.masks[t]) for t in range(sample.length)]

        frame_ious.append(ious)
        schedules.append(schedule)
        latencies.extend(schedule.latencies)

        if sample.length >= 2:

            consistency.append(temporal_consistency(masks, list(sample.masks)))

        if keep_masks:

            kept.append(masks)

    all_ious = [value for ious in frame_ious for value in ious]
    tc = _mean([entry.value for entry in consistency]) if consistency else 1.0

    row = MetricsRow(
        name=name,
        strategy=policy.label,
        avg_iou=_mean(all_ious),
        avg_fps=fps_from_latencies(latencies, warmup),
        temporal_consistency=tc,
    )

    logger.info("Evaluated %d sequence(s): %s", len(samples), row)

    return EvaluationReport(row, frame_ious, consistency, schedules, kept)

def evaluate(
    params: ModelParams,
    samples: Sequence["SequenceSample"],
    policy: Policy,
    name: str = "model",
    warmup: int = 0,
) -> MetricsRow:

    return run_evaluation(params, samples, policy, name=name, warmup=warmup).row

def describe_rows(rows: Sequence[MetricsRow], title: Optional[str] = None) -> str:

    """Fixed-width text table of evaluation rows."""

    lines = [title] if title else []
    lines.append(f"{'name':<20} {'strategy':<14} {'avg_iou':>8} {'avg_fps':>9} {'tc':>7}")

    for row in rows:

        lines.append(f"{row.name:<20} {row.strategy:<14} {row.avg_iou:>8.4f} {row.avg_fps:>9.2f} {row.temporal_consistency:>7.4f}")

    return "\n".join(lines)
