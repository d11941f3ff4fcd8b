"""Run ledger: persist train/eval outcomes without ever failing the command."""

import logging
from typing import Any, Dict, Optional, Sequence

from django.conf import settings

from .inference import Schedule
from .metrics import MetricsRow
from .models import EvaluationResult, TrainingRun

logger = logging.getLogger(__name__)

def recording_enabled(requested: bool = True) -> bool:

    return requested and getattr(settings, "MEMLANE_RECORD_RUNS", True)

def _jsonable(arguments: Dict[str, Any]) -> Dict[str, Any]:

    return {
        key: value if isinstance(value, (str, int, float, bool, type(None))) else str(value)
        for key, value in arguments.items()
    }

def record_training(
    pipeline: str,
    dataset_path: str,
    output_path: str,
    seed: int,
    epoch_losses: Sequence[float],
    arguments: Dict[str, Any],
    duration_s: float,
    val_loss: Optional[float] = None,
    status: str = "succeeded",
) -> Optional[TrainingRun]:

    try:

        return TrainingRun.objects.create(
            pipeline=pipeline,
            dataset_path=str(dataset_path)[:500],
            output_path=str(output_path)[:500],
            seed=seed,
            epochs=len(epoch_losses),
            status=status,
            final_loss=epoch_losses[-1] if epoch_losses else None,
            val_loss=val_loss,
            arguments=_jsonable(arguments),
            epoch_losses=list(epoch_losses),
            duration_s=duration_s,
        )

    # Recording must not interrupt a finished run
    except Exception:

        logger.warning("Could not record training run for %s", output_path, exc_info=True)

        return None

def record_evaluation(
    row: MetricsRow,
    model_path: str,
    dataset_path: str,
    schedule: Schedule,
    clear_on_slow: bool,
    arguments: Dict[str, Any],
) -> Optional[EvaluationResult]:

    try:

        return EvaluationResult.objects.create(
            name=row.name[:200],
            strategy=row.strategy[:50],
            model_path=str(model_path)[:500],
            dataset_path=str(dataset_path)[:500],
            avg_iou=row.avg_iou,
            avg_fps=row.avg_fps,
            temporal_consistency=row.temporal_consistency,
            clear_on_slow=clear_on_slow,
            slow_frames=schedule.slow_count,
            total_frames=len(schedule),
            arguments=_jsonable(arguments),
        )

    # Recording must not interrupt a finished run
    except Exception:

        logger.warning("Could not record evaluation of %s", model_path, exc_info=True)

        return None
