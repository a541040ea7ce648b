"""
Траектории толчков: схема, чтение/запись файлов, сборка обучающих пар,
статистики нормализации и разбиение train/validation.

Канонический формат — JSONL, одна строка на шаг:
  {"traj_id": "...", "t": 0, "po_x": ..., "po_y": ..., "omega": ...,
   "pr_x": ..., "pr_y": ..., "ur_x": ..., "ur_y": ...}
Первая запись траектории может нести объект "meta" (строки: объект, поверхность,
метка COM, сторона толчка). CSV — тот же набор колонок с фиксированным заголовком.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .exceptions import DegenerateDataError, SplitError, TrajectoryFormatError, TrajectoryTooShortError
from .geometry import ObjectPose, rotate, wrap_angle
from .metrics import INPUT_NAMES, NormStats
from .model import PredictionOutcome, PushInput

logger = logging.getLogger(__name__)

STEP_FIELDS = ("traj_id", "t", "po_x", "po_y", "omega", "pr_x", "pr_y", "ur_x", "ur_y")
FLOAT_FIELDS = STEP_FIELDS[2:]
FORMATS = ("jsonl", "csv")


# ==================
# СХЕМА
# ==================

@dataclass(frozen=True)
class TrajectoryStep:
    """Наблюдение в момент t: поза объекта, положение робота, команда движения u_r."""

    t: int
    object_pose: ObjectPose
    robot_pos: np.ndarray
    robot_motion: np.ndarray

    def to_record(self, traj_id: str) -> dict:
        return {
            "traj_id": traj_id,
            "t": int(self.t),
            "po_x": float(self.object_pose.position[0]),
            "po_y": float(self.object_pose.position[1]),
            "omega": float(self.object_pose.orientation),
            "pr_x": float(self.robot_pos[0]),
            "pr_y": float(self.robot_pos[1]),
            "ur_x": float(self.robot_motion[0]),
            "ur_y": float(self.robot_motion[1]),
        }


@dataclass
class Trajectory:
    id: str
    steps: list[TrajectoryStep]
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.steps)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(p_o (T,2), ω_o (T,), p_r (T,2), u_r (T,2))."""
        positions = np.array([step.object_pose.position for step in self.steps], dtype=float)
        headings = np.array([step.object_pose.orientation for step in self.steps], dtype=float)
        robot = np.array([step.robot_pos for step in self.steps], dtype=float)
        motion = np.array([step.robot_motion for step in self.steps], dtype=float)
        return positions, headings, robot, motion


@dataclass(frozen=True)
class SupervisedPair:
    x: PushInput
    y: PredictionOutcome
    traj_id: str = ""
    t: int = 0


@dataclass(frozen=True)
class PairBatch:
    """Пары, сложенные в массивы: x — батч PushInput, y — батч PredictionOutcome."""

    x: PushInput
    y: PredictionOutcome
    traj_ids: tuple[str, ...] = ()

    def __len__(self) -> int:
        return int(np.shape(self.y.dw_o)[0])

    def subset(self, index) -> PairBatch:
        index = np.asarray(index)
        ids = tuple(self.traj_ids[i] for i in index) if self.traj_ids else ()
        return PairBatch(
            PushInput(self.x.p_r_o[index], self.x.u_r_o[index]),
            PredictionOutcome(self.y.dp_o[index], self.y.dw_o[index]),
            ids,
        )

    def pair(self, i: int) -> SupervisedPair:
        return SupervisedPair(
            PushInput(self.x.p_r_o[i], self.x.u_r_o[i]),
            PredictionOutcome(self.y.dp_o[i], float(self.y.dw_o[i])),
            self.traj_ids[i] if self.traj_ids else "",
        )


def stack_pairs(pairs: Sequence[SupervisedPair] | PairBatch) -> PairBatch:
    if isinstance(pairs, PairBatch):
        return pairs
    if not pairs:
        empty = np.zeros((0, 2))
        return PairBatch(PushInput(empty, empty.copy()), PredictionOutcome(empty.copy(), np.zeros(0)))
    return PairBatch(
        PushInput(np.array([p.x.p_r_o for p in pairs], dtype=float),
                  np.array([p.x.u_r_o for p in pairs], dtype=float)),
        PredictionOutcome(np.array([p.y.dp_o for p in pairs], dtype=float),
                          np.array([p.y.dw_o for p in pairs], dtype=float)),
        tuple(p.traj_id for p in pairs),
    )


# ==================
# ЧТЕНИЕ / ЗАПИСЬ
# ==================

def _detect_format(path: Path, fmt: str | None) -> str:
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise TrajectoryFormatError(path, None, f"unknown trajectory format {fmt!r} (expected one of {FORMATS})")
    return fmt


def _parse_step(record: Mapping, path: Path, line: int) -> tuple[str, TrajectoryStep]:
    missing = [name for name in STEP_FIELDS if name not in record or record[name] in (None, "")]
    if missing:
        raise TrajectoryFormatError(path, line, f"missing field(s): {', '.join(missing)}")
    try:
        t = int(record["t"])
        values = {name: float(record[name]) for name in FLOAT_FIELDS}
    except (TypeError, ValueError) as exc:
        raise TrajectoryFormatError(path, line, f"bad value: {exc}") from exc
    bad = [name for name, value in values.items() if not math.isfinite(value)]
    if bad:
        raise TrajectoryFormatError(path, line, f"non-finite value(s): {', '.join(bad)}")
    step = TrajectoryStep(
        t=t,
        object_pose=ObjectPose(np.array([values["po_x"], values["po_y"]]), values["omega"]),
        robot_pos=np.array([values["pr_x"], values["pr_y"]]),
        robot_motion=np.array([values["ur_x"], values["ur_y"]]),
    )
    return str(record["traj_id"]), step


def _iter_jsonl(path: Path):
    with path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise TrajectoryFormatError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise TrajectoryFormatError(path, line_no, "expected a JSON object")
            yield line_no, record


def _iter_csv(path: Path, columns: Mapping[str, str] | None = None):
    columns = dict(columns or {name: name for name in STEP_FIELDS})
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if not header:
            return
        absent = [source for source in columns.values() if source not in header]
        if absent:
            raise TrajectoryFormatError(path, 1, f"header lacks column(s): {', '.join(absent)}")
        for row in reader:
            yield reader.line_num, {name: row.get(source) for name, source in columns.items()}


def _assemble(path: Path, rows: Iterable[tuple[int, Mapping]]) -> list[Trajectory]:
    grouped: dict[str, dict[int, tuple[int, TrajectoryStep]]] = {}
    metadata: dict[str, dict[str, str]] = {}
    for line_no, record in rows:
        traj_id, step = _parse_step(record, path, line_no)
        steps = grouped.setdefault(traj_id, {})
        if step.t in steps:
            raise TrajectoryFormatError(
                path, line_no, f"non-monotonic t: step {step.t} of {traj_id!r} repeats line {steps[step.t][0]}")
        steps[step.t] = (line_no, step)
        meta = record.get("meta")
        if isinstance(meta, Mapping):
            metadata.setdefault(traj_id, {}).update({str(k): str(v) for k, v in meta.items()})

    trajectories = []
    for traj_id in sorted(grouped):
        ordered = [grouped[traj_id][t][1] for t in sorted(grouped[traj_id])]
        if len(ordered) < 2:
            line_no = next(iter(grouped[traj_id].values()))[0]
            raise TrajectoryFormatError(path, line_no, f"trajectory {traj_id!r} has fewer than 2 steps")
        trajectories.append(Trajectory(traj_id, ordered, metadata.get(traj_id, {})))
    return trajectories


def load_trajectories(path, format: str | None = None) -> list[Trajectory]:
    """Траектории из файла, сгруппированные по id (по возрастанию), шаги упорядочены по t."""
    path = Path(path)
    fmt = _detect_format(path, format)
    rows = _iter_jsonl(path) if fmt == "jsonl" else _iter_csv(path)
    trajectories = _assemble(path, rows)
    logger.debug("loaded %d trajectories from %s", len(trajectories), path)
    return trajectories


def save_trajectories(trajectories: Iterable[Trajectory], path, format: str | None = None) -> Path:
    path = Path(path)
    fmt = _detect_format(path, format)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        if fmt == "jsonl":
            for trajectory in trajectories:
                for index, step in enumerate(trajectory.steps):
                    record = step.to_record(trajectory.id)
                    if index == 0 and trajectory.metadata:
                        record["meta"] = dict(sorted(trajectory.metadata.items()))
                    handle.write(json.dumps(record) + "\n")
        else:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(STEP_FIELDS)
            for trajectory in trajectories:
                for step in trajectory.steps:
                    record = step.to_record(trajectory.id)
                    writer.writerow([record[name] for name in STEP_FIELDS])
    return path


# ==================
# ВНЕШНИЕ ДАТАСЕТЫ
# ==================

class TrajectorySource(Protocol):
    """Адаптер внешнего формата: отдаёт траектории в канонической схеме."""

    def read(self) -> Iterable[Trajectory]: ...


@dataclass
class CsvColumnSource:
    """
    CSV с произвольными именами колонок.

    columns: каноническое имя → имя колонки в файле; недостающие имена
    берутся как есть.
    """

    path: Path
    columns: Mapping[str, str] = field(default_factory=dict)

    def read(self) -> list[Trajectory]:
        path = Path(self.path)
        mapping = {name: self.columns.get(name, name) for name in STEP_FIELDS}
        return _assemble(path, _iter_csv(path, mapping))


def convert_to_jsonl(source: TrajectorySource, path) -> int:
    """Записывает траектории источника в канонический JSONL; возвращает их число."""
    trajectories = list(source.read())
    save_trajectories(trajectories, path, "jsonl")
    return len(trajectories)


# ==================
# ОБУЧАЮЩИЕ ПАРЫ
# ==================

def to_pairs(trajectory: Trajectory, horizon: int = 1) -> list[SupervisedPair]:
    """
    Пары (x, y) с горизонтом horizon шагов: вход — положение робота и суммарная
    команда движения за горизонт в системе объекта на момент t, выход — исход
    за горизонт в той же системе. Даёт len − horizon пар.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if len(trajectory) <= horizon:
        raise TrajectoryTooShortError(
            f"trajectory {trajectory.id!r} has {len(trajectory)} steps, horizon {horizon} needs more")
    positions, headings, robot, motion = trajectory.arrays()
    n = len(trajectory) - horizon
    back = -headings[:n]

    total_motion = motion[:n].copy()
    for k in range(1, horizon):
        total_motion = total_motion + motion[k:k + n]

    p_r_o = rotate(back, robot[:n] - positions[:n])
    u_r_o = rotate(back, total_motion)
    dp_o = rotate(back, positions[horizon:] - positions[:n])
    dw_o = wrap_angle(headings[horizon:] - headings[:n])

    return [
        SupervisedPair(PushInput(p_r_o[i], u_r_o[i]), PredictionOutcome(dp_o[i], float(dw_o[i])),
                       trajectory.id, trajectory.steps[i].t)
        for i in range(n)
    ]


def pairs_from_trajectories(trajectories: Iterable[Trajectory], horizon: int = 1) -> list[SupervisedPair]:
    pairs = []
    for trajectory in trajectories:
        pairs.extend(to_pairs(trajectory, horizon))
    return pairs


def _checked_std(values: np.ndarray, name: str) -> float:
    std = float(np.std(values))
    scale = max(1.0, float(np.max(np.abs(values))))
    if not std > 1e-12 * scale:
        raise DegenerateDataError(name)
    return std


def fit_norm_stats(pairs: Sequence[SupervisedPair] | PairBatch) -> NormStats:
    """Популяционные средние и σ; σ_Δp общая для обеих компонент Δp_o."""
    batch = stack_pairs(pairs)
    if len(batch) < 2:
        raise DegenerateDataError("pairs", f"need at least 2 pairs to fit statistics, got {len(batch)}")
    features = batch.x.features()
    input_mean = features.mean(axis=0)
    input_std = np.array([_checked_std(features[:, i], name) for i, name in enumerate(INPUT_NAMES)])

    dp = batch.y.dp_o
    dp_mean = dp.mean(axis=0)
    dp_std = float(np.sqrt(np.mean((dp - dp_mean) ** 2)))
    if not dp_std > 1e-12 * max(1.0, float(np.max(np.abs(dp)))):
        raise DegenerateDataError("dp_o")
    dw = batch.y.dw_o
    dw_std = _checked_std(dw, "dw_o")
    return NormStats(input_mean, input_std, dp_mean, dp_std, float(dw.mean()), dw_std)


def split_dataset(trajectories: Sequence[Trajectory], fraction: float, seed: int) -> tuple[list[Trajectory], list[Trajectory]]:
    """Детерминированное разбиение по траекториям (траектория целиком в одной части)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(trajectories)
    if n < 2:
        raise SplitError(f"need at least 2 trajectories to split, got {n}")
    n_train = min(max(int(round(fraction * n)), 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    train_index = sorted(order[:n_train].tolist())
    valid_index = sorted(order[n_train:].tolist())
    return [trajectories[i] for i in train_index], [trajectories[i] for i in valid_index]
