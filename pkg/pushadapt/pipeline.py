"""
Офлайн-предобучение, онлайн-адаптация θ_online, базовые модели и оркестрация эксперимента.

Онлайн-цикл строго последователен: на шаге t сначала прогноз с текущим θ_online
и запись потери, затем несколько шагов GD на паре (x(t), y(t)) только по θ_online.
Fixed (θ_online(0)) и чисто нейросетевой предиктор оцениваются на том же потоке.
"""
from __future__ import annotations

import csv
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .checkpoints import Checkpoint, checkpoint_save, config_hash
from .data import (
    PairBatch,
    SupervisedPair,
    Trajectory,
    fit_norm_stats,
    load_trajectories,
    pairs_from_trajectories,
    stack_pairs,
)
from .exceptions import DegenerateDataError, NonFiniteLossError, PhysicsDomainError
from .metrics import LossBreakdown, NormStats, nmse_summary, step_loss, step_loss_grad
from .model import (
    DEFAULT_H,
    BaselineModel,
    CombinedModel,
    baseline_nn_backward,
    baseline_nn_forward,
    combined_backward,
    combined_forward,
    default_online_params,
    online_jacobian,
    online_step_scale,
)
from .nn import BASELINE_OUTPUT_DIM, MlpParams, mlp_init
from .optim import AdamState, SgdConfig, adam_step, sgd_steps
from .physics import OnlineParams
from .simulator import MANIFEST_NAME, load_suite

logger = logging.getLogger(__name__)

# Демпфирование Марквардта средней информационной матрицы θ_online
ONLINE_DAMPING = 0.25

SERIES = ("online", "fixed", "nn")
SUMMARY_COLUMNS = (
    "experiment",
    "offline_nn_pos", "offline_pos", "fixed_pos", "online_pos",
    "offline_nn_rot", "offline_rot", "fixed_rot", "online_rot",
)
LOSS_COLUMNS = ("step", "model", "pos_x", "pos_y", "rot", "total")
CURVE_COLUMNS = ("epoch", "combined", "nn")
THETA_COLUMNS = ("step", "traj_id", "v_x", "v_y", "h")

TRAINING_CURVE_CSV = "training_curve.csv"
LOSSES_CSV = "losses.csv"
SUMMARY_CSV = "summary.csv"
THETA_CSV = "theta.csv"
CHECKPOINT_NAME = "checkpoint.json"
ADAPTED_CHECKPOINT_NAME = "adapted.json"


# =========================
# Конфигурации
# =========================

@dataclass(frozen=True)
class OfflineConfig:
    """Офлайн-обучение: Adam, мини-батчи, число эпох (0 — вернуть инициализацию)."""

    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.005
    seed: int = 0
    shuffle: bool = True
    train_online_params_offline: bool = False
    clip_norm: float | None = None
    log_every: int = 20

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    offline: OfflineConfig = field(default_factory=OfflineConfig)
    sgd: SgdConfig = field(default_factory=SgdConfig)
    horizon: int = 1
    reset_per_trajectory: bool = False
    train_baseline: bool = True
    initial_h: float = DEFAULT_H

    def to_dict(self) -> dict:
        return asdict(self)


# =========================
# Офлайн-фаза
# =========================

def _as_batch(pairs) -> PairBatch:
    batch = stack_pairs(pairs)
    if len(batch) == 0:
        raise DegenerateDataError("pairs", "offline training needs a non-empty dataset")
    return batch


def _minibatches(n: int, config: OfflineConfig, rng: np.random.Generator):
    order = rng.permutation(n) if config.shuffle else np.arange(n)
    for start in range(0, n, config.batch_size):
        yield order[start:start + config.batch_size]


def combined_losses(model: CombinedModel, pairs) -> LossBreakdown:
    batch = stack_pairs(pairs)
    prediction, _ = combined_forward(model, batch.x)
    return step_loss(prediction, batch.y, model.norm)


def baseline_losses(baseline: BaselineModel, pairs) -> LossBreakdown:
    batch = stack_pairs(pairs)
    prediction = baseline_nn_forward(baseline.mlp, baseline.norm, batch.x)
    return step_loss(prediction, batch.y, baseline.norm)


def evaluate_combined(model: CombinedModel, pairs) -> tuple[float, float]:
    """(NMSE_pos, NMSE_rot) комбинированной модели на наборе пар."""
    return nmse_summary(combined_losses(model, _as_batch(pairs)))


def evaluate_baseline(baseline: BaselineModel, pairs) -> tuple[float, float]:
    return nmse_summary(baseline_losses(baseline, _as_batch(pairs)))


def offline_train(pairs: Sequence[SupervisedPair] | PairBatch, config: OfflineConfig,
                  online_initial: OnlineParams | None = None,
                  norm: NormStats | None = None) -> tuple[CombinedModel, np.ndarray]:
    """
    Минимизация средней ℓ по θ_offline (и по θ_online, если включена
    train_online_params_offline). Возвращает модель и среднюю потерю по эпохам.
    """
    batch = _as_batch(pairs)
    norm = norm or fit_norm_stats(batch)
    online = online_initial or default_online_params()
    model = CombinedModel(mlp_init(config.seed), online, norm)
    curve = np.zeros(config.epochs)
    if config.epochs == 0:
        return model, curve

    scale = online_step_scale(model)
    train_online = config.train_online_params_offline
    n_mlp = model.mlp.parameter_count
    theta = model.mlp.to_vector()
    if train_online:
        theta = np.concatenate([theta, online.to_vector() / scale])
    state = AdamState.for_params(theta, lr=config.lr, clip_norm=config.clip_norm)
    rng = np.random.default_rng([config.seed, 1])

    for epoch in range(config.epochs):
        epoch_total = 0.0
        for index in _minibatches(len(batch), config, rng):
            sub = batch.subset(index)
            prediction, tape = combined_forward(model, sub.x)
            losses = step_loss(prediction, sub.y, norm)
            batch_total = float(np.sum(losses.total))
            if not math.isfinite(batch_total):
                raise NonFiniteLossError(epoch, f"non-finite offline loss in epoch {epoch}")
            epoch_total += batch_total

            g_dp, g_dw = step_loss_grad(prediction, sub.y, norm)
            grad_mlp, grad_online = combined_backward(model, tape, (g_dp / len(index), g_dw / len(index)))
            grads = grad_mlp.to_vector()
            if train_online:
                grads = np.concatenate([grads, grad_online * scale])
            theta, state = adam_step(state, theta, grads)

            mlp = model.mlp.from_vector(theta[:n_mlp])
            if train_online:
                online = OnlineParams.from_vector(theta[n_mlp:] * scale)
            model = CombinedModel(mlp, online, norm)
        curve[epoch] = epoch_total / len(batch)
        if config.log_every and (epoch + 1) % config.log_every == 0:
            logger.info("combined model epoch %d/%d: mean loss %.5f", epoch + 1, config.epochs, curve[epoch])
    return model, curve


def offline_train_baseline(pairs: Sequence[SupervisedPair] | PairBatch, config: OfflineConfig,
                           norm: NormStats | None = None) -> tuple[BaselineModel, np.ndarray]:
    """Чисто нейросетевой предиктор (4 → 16 → 16 → 16 → 3) с тем же Adam и батчами."""
    batch = _as_batch(pairs)
    norm = norm or fit_norm_stats(batch)
    mlp = mlp_init(config.seed, output_dim=BASELINE_OUTPUT_DIM)
    curve = np.zeros(config.epochs)
    if config.epochs == 0:
        return BaselineModel(mlp, norm), curve

    theta = mlp.to_vector()
    state = AdamState.for_params(theta, lr=config.lr, clip_norm=config.clip_norm)
    rng = np.random.default_rng([config.seed, 1])
    for epoch in range(config.epochs):
        epoch_total = 0.0
        for index in _minibatches(len(batch), config, rng):
            sub = batch.subset(index)
            prediction, tape = baseline_nn_forward(mlp, norm, sub.x, return_tape=True)
            losses = step_loss(prediction, sub.y, norm)
            batch_total = float(np.sum(losses.total))
            if not math.isfinite(batch_total):
                raise NonFiniteLossError(epoch, f"non-finite baseline loss in epoch {epoch}")
            epoch_total += batch_total
            g_dp, g_dw = step_loss_grad(prediction, sub.y, norm)
            grads = baseline_nn_backward(mlp, norm, tape, (g_dp / len(index), g_dw / len(index)))
            theta, state = adam_step(state, theta, grads.to_vector())
            mlp = mlp.from_vector(theta)
        curve[epoch] = epoch_total / len(batch)
        if config.log_every and (epoch + 1) % config.log_every == 0:
            logger.info("baseline epoch %d/%d: mean loss %.5f", epoch + 1, config.epochs, curve[epoch])
    return BaselineModel(mlp, norm), curve


# =========================
# Онлайн-фаза
# =========================

@dataclass
class OnlineRunResult:
    """Потери по шагам для каждой модели и история θ_online = (v_x, v_y, rho) после каждого шага."""

    online: LossBreakdown
    fixed: LossBreakdown
    nn: LossBreakdown | None
    theta_history: np.ndarray
    traj_ids: tuple[str, ...]
    final_online: OnlineParams

    def __len__(self) -> int:
        return len(self.online)

    def series(self) -> dict[str, LossBreakdown]:
        series = {"online": self.online, "fixed": self.fixed}
        if self.nn is not None:
            series["nn"] = self.nn
        return series

    def summary(self) -> dict[str, tuple[float, float]]:
        return {name: nmse_summary(losses) for name, losses in self.series().items()}

    @property
    def v_history(self) -> np.ndarray:
        return self.theta_history[:, :2]

    @property
    def h_history(self) -> np.ndarray:
        return np.array([OnlineParams.from_vector(theta).h for theta in self.theta_history])


def _single_loss(prediction, target, norm: NormStats, step: int) -> np.ndarray:
    loss = step_loss(prediction, target, norm)
    row = np.array([loss.pos_x, loss.pos_y, loss.rot, loss.total], dtype=float)
    if not np.all(np.isfinite(row)):
        raise NonFiniteLossError(step, f"non-finite online loss at step {step}")
    return row


def _rows_to_breakdown(rows: list[np.ndarray]) -> LossBreakdown:
    table = np.array(rows, dtype=float).reshape(-1, 4)
    return LossBreakdown(table[:, 0], table[:, 1], table[:, 2], table[:, 3])


def _residual_jacobian(model: CombinedModel, push) -> np.ndarray:
    """Якобиан нормированных невязок step_loss по θ_online, (3, 3)."""
    norm = model.norm
    weights = np.array([1.0 / norm.dp_std, 1.0 / norm.dp_std, 1.0 / norm.dw_std])
    return online_jacobian(model, push) * weights[:, None]


def online_preconditioner(information: np.ndarray, count: int) -> np.ndarray:
    """
    Обратная средняя информационная матрица Гаусса–Ньютона с демпфированием Марквардта.

    information — сумма JᵀJ нормированных невязок по уже увиденным входам потока.
    Шаг lr·P·∇ℓ не зависит от единиц v и rho; при lr·steps_per_update ≪ 1 каждый
    образец сдвигает θ_online на долю ~2·lr·steps_per_update его решения МНК.
    """
    mean = information / count
    damped = mean + ONLINE_DAMPING * np.diag(np.diag(mean))
    return np.linalg.pinv(damped, hermitian=True)


def online_adapt(model: CombinedModel, stream: Sequence[SupervisedPair], sgd: SgdConfig,
                 baseline: BaselineModel | None = None,
                 reset_per_trajectory: bool = False) -> OnlineRunResult:
    """
    Алгоритм онлайн-обучения: прогноз, запись потери, затем sgd.steps_per_update
    шагов GD по θ_online на том же образце. θ_offline не меняется.

    Градиент предобуславливается online_preconditioner: информация копится только
    по входам x(t), так что прогноз на шаге t не зависит от y(t).
    """
    if len(stream) == 0:
        raise ValueError("online_adapt needs a non-empty stream")
    norm = model.norm
    initial = model.online.to_vector()
    theta = initial.copy()
    information = np.zeros((3, 3))
    seen = 0

    online_rows, fixed_rows, nn_rows, history, traj_ids = [], [], [], [], []
    previous_id = None
    for step, pair in enumerate(stream):
        if reset_per_trajectory and previous_id is not None and pair.traj_id != previous_id:
            theta = initial.copy()
            information = np.zeros((3, 3))
            seen = 0
        previous_id = pair.traj_id
        traj_ids.append(pair.traj_id)

        try:
            current = model.with_online(OnlineParams.from_vector(theta))
            prediction, _ = combined_forward(current, pair.x)
            online_rows.append(_single_loss(prediction, pair.y, norm, step))
            fixed_prediction, _ = combined_forward(model, pair.x)
            fixed_rows.append(_single_loss(fixed_prediction, pair.y, norm, step))
            if baseline is not None:
                nn_rows.append(_single_loss(baseline_nn_forward(baseline.mlp, baseline.norm, pair.x),
                                            pair.y, baseline.norm, step))

            jacobian = _residual_jacobian(current, pair.x)
            information = information + jacobian.T @ jacobian
            seen += 1
            preconditioner = online_preconditioner(information, seen)

            def grad_fn(params, pair=pair, preconditioner=preconditioner):
                candidate = model.with_online(OnlineParams.from_vector(params))
                out, tape = combined_forward(candidate, pair.x)
                _, grad_online = combined_backward(candidate, tape, step_loss_grad(out, pair.y, norm))
                return preconditioner @ grad_online

            theta = sgd_steps(sgd, theta, grad_fn)
        except (OverflowError, PhysicsDomainError, np.linalg.LinAlgError) as exc:
            raise NonFiniteLossError(step, f"online update diverged at step {step}: {exc}") from exc
        if not np.all(np.isfinite(theta)):
            raise NonFiniteLossError(step, f"online parameters became non-finite at step {step}")
        history.append(theta.copy())
        logger.debug("step %d: loss %.5f, v=(%.5f, %.5f), rho=%.4f",
                     step, online_rows[-1][3], theta[0], theta[1], theta[2])

    result = OnlineRunResult(
        online=_rows_to_breakdown(online_rows),
        fixed=_rows_to_breakdown(fixed_rows),
        nn=_rows_to_breakdown(nn_rows) if baseline is not None else None,
        theta_history=np.array(history),
        traj_ids=tuple(traj_ids),
        final_online=OnlineParams.from_vector(theta),
    )
    logger.info("online run over %d steps: mean total loss online %.4f, fixed %.4f",
                len(result), float(np.mean(result.online.total)), float(np.mean(result.fixed.total)))
    return result


# =========================
# Артефакты
# =========================

def load_dataset(path) -> list[Trajectory]:
    """Набор траекторий: каталог или манифест набора, либо один файл JSONL/CSV."""
    path = Path(path)
    if path.is_dir() or path.name == MANIFEST_NAME:
        return load_suite(path)
    return load_trajectories(path)


def write_training_curve(path, curve: np.ndarray, nn_curve: np.ndarray | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for epoch, value in enumerate(curve):
            nn_value = float(nn_curve[epoch]) if nn_curve is not None and epoch < len(nn_curve) else ""
            writer.writerow([epoch + 1, float(value), nn_value])
    return path


def write_losses(path, result: OnlineRunResult) -> Path:
    """Потери по шагам: одна строка на (шаг, модель)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOSS_COLUMNS)
        for name, losses in result.series().items():
            for step, row in enumerate(losses.rows()):
                writer.writerow([step, name, *(float(x) for x in row)])
    return path


def write_theta_history(path, result: OnlineRunResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(THETA_COLUMNS)
        for step, (theta, traj_id) in enumerate(zip(result.theta_history, result.traj_ids)):
            online = OnlineParams.from_vector(theta)
            writer.writerow([step, traj_id, float(online.v[0]), float(online.v[1]), online.h])
    return path


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    offline_nn: tuple[float, float] | None
    offline: tuple[float, float]
    fixed: tuple[float, float]
    online: tuple[float, float]

    def cells(self) -> list:
        def pick(score, index):
            return "" if score is None else float(score[index])

        columns = (self.offline_nn, self.offline, self.fixed, self.online)
        return [self.experiment, *(pick(s, 0) for s in columns), *(pick(s, 1) for s in columns)]


def write_summary(path, rows: Sequence[SummaryRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(row.cells())
    return path


# =========================
# Эксперимент целиком
# =========================

@dataclass
class TrainingOutcome:
    checkpoint: Checkpoint
    curve: np.ndarray
    nn_curve: np.ndarray | None
    offline_losses: dict[str, float] = field(default_factory=dict)

    @property
    def baseline(self) -> BaselineModel | None:
        if self.checkpoint.baseline is None:
            return None
        return BaselineModel(self.checkpoint.baseline, self.checkpoint.model.norm)


def train_models(trajectories: Sequence[Trajectory], config: ExperimentConfig) -> TrainingOutcome:
    """Офлайн-фаза: комбинированная модель, (необязательно) базовая сеть, офлайн-NMSE."""
    pairs = stack_pairs(pairs_from_trajectories(trajectories, config.horizon))
    online_initial = default_online_params(config.initial_h)
    model, curve = offline_train(pairs, config.offline, online_initial)
    losses = combined_losses(model, pairs)
    scores = {"offline": nmse_summary(losses)}
    offline_losses = {name: float(np.mean(getattr(losses, name)))
                      for name in ("pos_x", "pos_y", "rot", "total")}
    baseline_mlp: MlpParams | None = None
    nn_curve = None
    if config.train_baseline:
        baseline, nn_curve = offline_train_baseline(pairs, config.offline, norm=model.norm)
        baseline_mlp = baseline.mlp
        scores["offline_nn"] = evaluate_baseline(baseline, pairs)
    logger.info("offline NMSE (pos, rot): %s", ", ".join(f"{k}={v[0]:.4f}/{v[1]:.4f}" for k, v in scores.items()))
    checkpoint = Checkpoint(
        model=model,
        online_initial=model.online,
        baseline=baseline_mlp,
        scores=scores,
        config_hash=config_hash(config.to_dict()),
        seed=config.offline.seed,
    )
    return TrainingOutcome(checkpoint, curve, nn_curve, offline_losses)


@dataclass
class AdaptationOutcome:
    result: OnlineRunResult
    summary: SummaryRow
    checkpoint: Checkpoint


def adapt_checkpoint(checkpoint: Checkpoint, trajectories: Sequence[Trajectory], config: ExperimentConfig,
                     experiment: str | None = None) -> AdaptationOutcome:
    """Онлайн-фаза от θ_online(0) чекпойнта; θ_online переносится между траекториями набора."""
    stream = pairs_from_trajectories(trajectories, config.horizon)
    model = checkpoint.model.with_online(checkpoint.online_initial)
    baseline = None
    if checkpoint.baseline is not None:
        baseline = BaselineModel(checkpoint.baseline, model.norm)
    result = online_adapt(model, stream, config.sgd, baseline, config.reset_per_trajectory)
    scores = result.summary()
    summary = SummaryRow(
        experiment=experiment or config.name,
        offline_nn=checkpoint.scores.get("offline_nn"),
        offline=checkpoint.scores.get("offline", (math.nan, math.nan)),
        fixed=scores["fixed"],
        online=scores["online"],
    )
    adapted = Checkpoint(
        model=model.with_online(result.final_online),
        online_initial=checkpoint.online_initial,
        baseline=checkpoint.baseline,
        scores=checkpoint.scores,
        config_hash=checkpoint.config_hash,
        seed=checkpoint.seed,
    )
    return AdaptationOutcome(result, summary, adapted)


@dataclass
class ExperimentArtifacts:
    training: TrainingOutcome
    adaptation: AdaptationOutcome
    paths: dict[str, Path]

    @property
    def result(self) -> OnlineRunResult:
        return self.adaptation.result


def run_experiment(offline_source, online_source, config: ExperimentConfig, out_dir) -> ExperimentArtifacts:
    """
    Офлайн-обучение на первом наборе, онлайн-адаптация на втором; в out_dir
    пишутся training_curve.csv, losses.csv, theta.csv, summary.csv и два чекпойнта.
    """
    out_dir = Path(out_dir)
    offline = offline_source if isinstance(offline_source, list) else load_dataset(offline_source)
    online = online_source if isinstance(online_source, list) else load_dataset(online_source)
    training = train_models(offline, config)
    adaptation = adapt_checkpoint(training.checkpoint, online, config)

    paths = {
        "training_curve": write_training_curve(out_dir / TRAINING_CURVE_CSV, training.curve, training.nn_curve),
        "losses": write_losses(out_dir / LOSSES_CSV, adaptation.result),
        "theta": write_theta_history(out_dir / THETA_CSV, adaptation.result),
        "summary": write_summary(out_dir / SUMMARY_CSV, [adaptation.summary]),
        "checkpoint": checkpoint_save(training.checkpoint, out_dir / CHECKPOINT_NAME),
        "adapted": checkpoint_save(adaptation.checkpoint, out_dir / ADAPTED_CHECKPOINT_NAME),
    }
    logger.info("experiment %s written to %s", config.name, out_dir)
    return ExperimentArtifacts(training, adaptation, paths)
