"""
SVG-графики онлайн-потерь.

Для каждой компоненты потери (pos_x, pos_y, rot, total) — отдельный файл:
скользящее среднее по 10 шагам для каждой модели и полоса ±1 скользящего σ.
Разметка SVG — шаблон pushadapt/loss_plot.svg, координаты считаются здесь.
"""
from __future__ import annotations

import csv
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.template.loader import render_to_string

from .exceptions import ReportFormatError
from .metrics import moving_average, moving_std
from .pipeline import LOSS_COLUMNS

logger = logging.getLogger(__name__)

COMPONENTS = ("pos_x", "pos_y", "rot", "total")
COLORS = {"online": "#d62728", "fixed": "#1f77b4", "nn": "#2ca02c"}
TITLES = {
    "pos_x": "Потеря по положению, x",
    "pos_y": "Потеря по положению, y",
    "rot": "Потеря по повороту",
    "total": "Суммарная потеря",
}

WIDTH, HEIGHT = 640, 360
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 64, 110, 36, 44


def read_losses(path) -> dict[str, dict[str, np.ndarray]]:
    """losses.csv → {модель: {компонента: массив по шагам}} в порядке шагов."""
    path = Path(path)
    rows: dict[str, list[tuple[int, list[float]]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in LOSS_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ReportFormatError(path, 1, f"missing columns {missing}")
        for record in reader:
            line = reader.line_num
            try:
                step = int(record["step"])
                values = [float(record[c]) for c in COMPONENTS]
            except (TypeError, ValueError) as exc:
                raise ReportFormatError(path, line, f"malformed row: {exc}") from None
            if not all(math.isfinite(x) for x in values):
                raise ReportFormatError(path, line, "non-finite loss value")
            rows.setdefault(record["model"], []).append((step, values))
    if not rows:
        raise ReportFormatError(path, None, "no loss rows to plot")

    series = {}
    for model, entries in rows.items():
        entries.sort(key=lambda item: item[0])
        table = np.array([values for _, values in entries], dtype=float)
        series[model] = {name: table[:, i] for i, name in enumerate(COMPONENTS)}
    return series


@dataclass(frozen=True)
class _Axis:
    lo: float
    hi: float
    pixel_lo: float
    pixel_hi: float

    def __call__(self, value):
        span = self.hi - self.lo or 1.0
        return self.pixel_lo + (np.asarray(value, dtype=float) - self.lo) / span * (self.pixel_hi - self.pixel_lo)


def _points(xs, ys) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def render_loss_plot(series: dict[str, np.ndarray], component: str, window: int = 10,
                     offline_loss: float | None = None) -> str:
    """SVG для одной компоненты: series — {модель: потери по шагам}."""
    if not series or any(len(values) == 0 for values in series.values()):
        raise ValueError("cannot plot an empty loss series")
    smoothed = {}
    for model, values in series.items():
        mean = moving_average(values, window)
        std = moving_std(values, window)
        smoothed[model] = (mean, std)

    steps = max(len(values) for values in series.values())
    top = max(float(np.max(mean + std)) for mean, std in smoothed.values())
    if offline_loss is not None:
        top = max(top, offline_loss)
    top = top * 1.05 if top > 0 else 1.0

    x_axis = _Axis(0.0, max(steps - 1, 1), MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    y_axis = _Axis(0.0, top, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)

    curves = []
    for index, (model, (mean, std)) in enumerate(smoothed.items()):
        xs = x_axis(np.arange(len(mean)))
        upper = y_axis(mean + std)
        lower = y_axis(np.maximum(mean - std, 0.0))
        curves.append({
            "model": model,
            "color": COLORS.get(model, "#7f7f7f"),
            "line": _points(xs, y_axis(mean)),
            "band": _points(np.concatenate([xs, xs[::-1]]), np.concatenate([upper, lower[::-1]])),
            "legend_y": MARGIN_TOP + 18 * index,
        })

    context = {
        "width": WIDTH,
        "height": HEIGHT,
        "title": TITLES.get(component, component),
        "component": component,
        "window": window,
        "plot_left": MARGIN_LEFT,
        "plot_right": WIDTH - MARGIN_RIGHT,
        "plot_top": MARGIN_TOP,
        "plot_bottom": HEIGHT - MARGIN_BOTTOM,
        "legend_x": WIDTH - MARGIN_RIGHT + 12,
        "curves": curves,
        "y_ticks": [{"y": f"{float(y_axis(v)):.2f}", "label": f"{v:.3g}"} for v in _ticks(0.0, top)],
        "x_ticks": [{"x": f"{float(x_axis(v)):.2f}", "label": str(int(round(v)))}
                    for v in _ticks(0.0, max(steps - 1, 1))],
        "reference": None,
    }
    if offline_loss is not None:
        context["reference"] = {"value": repr(float(offline_loss)), "y": f"{float(y_axis(offline_loss)):.2f}"}
    return render_to_string("pushadapt/loss_plot.svg", context)


def write_loss_plots(loss_csv, out_dir, window: int = 10,
                     offline_loss: float | Mapping[str, float] | None = None) -> list[Path]:
    """
    Четыре SVG (по компонентам) в out_dir; возвращает пути.

    offline_loss — число (линия только на графике total) или {компонента: офлайн-потеря}.
    """
    if isinstance(offline_loss, Mapping):
        references = {name: float(value) for name, value in offline_loss.items()}
    elif offline_loss is not None:
        references = {"total": float(offline_loss)}
    else:
        references = {}
    series = read_losses(loss_csv)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for component in COMPONENTS:
        svg = render_loss_plot({model: values[component] for model, values in series.items()},
                               component, window, references.get(component))
        path = out_dir / f"loss_{component}.svg"
        path.write_text(svg, encoding="utf-8")
        paths.append(path)
    logger.info("wrote %d plots to %s", len(paths), out_dir)
    return paths
