from django.db import models
from typing import TYPE_CHECKING

if TYPE_CHECKING:

    from .metrics import MetricsRow

class TrainingRun(models.Model):

    STATUS_CHOICES = [
        ("succeeded", "Succeeded"),
        ("failed", "Failed"),
    ]

    pipeline = models.CharField(max_length=20)
    dataset_path = models.CharField(max_length=500)
    output_path = models.CharField(max_length=500)
    seed = models.BigIntegerField()
    epochs = models.PositiveIntegerField()
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="succeeded")
    final_loss = models.FloatField(null=True, blank=True)
    val_loss = models.FloatField(null=True, blank=True)
    arguments = models.JSONField(default=dict, blank=True)
    epoch_losses = models.JSONField(default=list, blank=True)
    duration_s = models.FloatField(default=0.0)
    creation_date = models.DateTimeField(auto_now_add=True)

    class Meta:

        ordering = ["-creation_date", "-id"]
        verbose_name = "Training Run"
        verbose_name_plural = "Training Runs"

    def __str__(self) -> str:

        loss = f"{self.final_loss:.4f}" if self.final_loss is not None else "n/a"

        return f"{self.pipeline} x{self.epochs} -> {self.output_path} (loss {loss}, {self.status})"

class EvaluationResultManager(models.Manager):

    def latest_rows(self, limit: int = 0) -> list:

        """Newest results first as MetricsRow values; ``limit`` 0 means all."""

        queryset = self.all()

        if limit:

            queryset = queryset[:limit]

        return [result.to_metrics_row() for result in queryset]

class EvaluationResult(models.Model):

    name = models.CharField(max_length=200)
    strategy = models.CharField(max_length=50)
    model_path = models.CharField(max_length=500)
    dataset_path = models.CharField(max_length=500)
    avg_iou = models.FloatField()
    avg_fps = models.FloatField()
    temporal_consistency = models.FloatField()
    clear_on_slow = models.BooleanField(default=True)
    slow_frames = models.PositiveIntegerField(default=0)
    total_frames = models.PositiveIntegerField(default=0)
    arguments = models.JSONField(default=dict, blank=True)
    creation_date = models.DateTimeField(auto_now_add=True)
    objects = EvaluationResultManager()

    class Meta:

        ordering = ["-creation_date", "-id"]
        verbose_name = "Evaluation Result"
        verbose_name_plural = "Evaluation Results"

    def __str__(self) -> str:

        return f"{self.name} [{self.strategy}] iou={self.avg_iou:.4f} fps={self.avg_fps:.2f}"

    def to_metrics_row(self) -> "MetricsRow":

        from .metrics import MetricsRow

        return MetricsRow(
            name=self.name,
            strategy=self.strategy,
            avg_iou=self.avg_iou,
            avg_fps=self.avg_fps,
            temporal_consistency=self.temporal_consistency,
        )
