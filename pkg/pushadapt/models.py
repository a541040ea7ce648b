from django.db import models
from django.utils import timezone


# =========================
# ЖУРНАЛ ЗАПУСКОВ
# =========================

class ExperimentRunManager(models.Manager):
    def record(self, kind: str, label: str, seed: int, config: dict, config_hash: str, out_dir: str,
               scores: dict[str, tuple[float, float]] | None = None, steps: int = 0) -> "ExperimentRun":
        """Запуск и его оценки (NMSE по сериям) одной записью."""
        run = self.create(
            kind=kind,
            label=label,
            seed=seed,
            config=config,
            config_hash=config_hash,
            out_dir=out_dir,
        )
        for series, (pos, rot) in (scores or {}).items():
            series_steps = 0 if series in OFFLINE_SERIES else steps
            ModelScore.objects.create(run=run, series=series, nmse_pos=pos, nmse_rot=rot, steps=series_steps)
        return run


class ExperimentRun(models.Model):
    """
    Один запуск команды pushadapt: обучение, адаптация, оценка или эксперимент целиком.

    Запись — только бухгалтерия: параметры, сид, хеш конфигурации и куда записаны
    артефакты. Сами модели и кривые потерь живут в файлах out_dir.
    """

    class Kind(models.TextChoices):
        SIMULATE = "simulate", "Генерация траекторий"
        TRAIN = "train", "Офлайн-обучение"
        ADAPT = "adapt", "Онлайн-адаптация"
        EVAL = "eval", "Оценка"
        EXPERIMENT = "experiment", "Эксперимент"

    kind = models.CharField(
        max_length=20,
        choices=Kind.choices,
        help_text="Какая команда создала запись."
    )
    label = models.CharField(
        max_length=200,
        blank=True,
        help_text="Имя эксперимента (колонка experiment в summary.csv)."
    )
    seed = models.BigIntegerField(default=0, help_text="Главный сид запуска.")
    config = models.JSONField(default=dict, help_text="Итоговая конфигурация после слияния источников.")
    config_hash = models.CharField(
        max_length=64,
        blank=True,
        help_text="sha256 канонического JSON конфигурации (как в чекпойнте)."
    )
    out_dir = models.CharField(max_length=500, blank=True, help_text="Каталог с артефактами запуска.")

    created_at = models.DateTimeField(default=timezone.now, editable=False)

    objects = ExperimentRunManager()

    class Meta:
        db_table = "pushadapt_run"
        verbose_name = "Запуск"
        verbose_name_plural = "Запуски"
        ordering = ["-created_at", "-id"]
        indexes = [
            models.Index(fields=["kind"], name="pushadapt_run_kind_idx"),
            models.Index(fields=["config_hash"], name="pushadapt_run_hash_idx"),
            models.Index(fields=["created_at"], name="pushadapt_run_created_idx"),
        ]

    def __str__(self) -> str:
        return f"[{self.kind}] {self.label or self.config_hash[:8]}"


class ModelScore(models.Model):
    """NMSE одной модели в запуске (строка таблицы summary.csv)."""

    class Series(models.TextChoices):
        OFFLINE_NN = "offline_nn", "Offline NN"
        OFFLINE = "offline", "Offline"
        FIXED = "fixed", "Fixed"
        ONLINE = "online", "Online"
        NN = "nn", "NN (online stream)"

    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name="scores",
        help_text="Запуск, к которому относится оценка."
    )
    series = models.CharField(max_length=20, choices=Series.choices)
    nmse_pos = models.FloatField(help_text="NMSE по положению (среднее ½(ℓ_x + ℓ_y)).")
    nmse_rot = models.FloatField(help_text="NMSE по повороту.")
    steps = models.PositiveIntegerField(default=0, help_text="Число шагов онлайн-потока (0 для офлайн-оценок).")

    class Meta:
        db_table = "pushadapt_score"
        verbose_name = "Оценка модели"
        verbose_name_plural = "Оценки моделей"
        constraints = [
            models.UniqueConstraint(fields=["run", "series"], name="uniq_score_per_series"),
        ]

    def __str__(self) -> str:
        return f"{self.run_id}:{self.series} pos={self.nmse_pos:.4f} rot={self.nmse_rot:.4f}"


# Оценки на офлайн-выборке не привязаны к онлайн-потоку
OFFLINE_SERIES = frozenset({ModelScore.Series.OFFLINE, ModelScore.Series.OFFLINE_NN})
