"""
Чекпойнт модели: один JSON-документ с именованными массивами.

  {"format": "pushadapt-checkpoint", "version": 1,
   "provenance": {"config_hash": "...", "seed": 0},
   "scores": {"offline": [pos, rot], "offline_nn": [pos, rot]},
   "arrays": {"mlp.layer0.weights": {"shape": [16, 4], "data": "<base64>"}, ...}}

Массивы — little-endian float64, закодированные base64; форма указана явно.
Группы: mlp.*, baseline.* (необязательная), online.*, online_initial.*, norm.*.
"""
from __future__ import annotations

import base64
import binascii
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import CheckpointCorruptError, CheckpointShapeError, CheckpointVersionError
from .metrics import NormStats
from .model import CombinedModel
from .nn import BASELINE_OUTPUT_DIM, CONTACT_OUTPUT_DIM, INPUT_DIM, LayerParams, MlpParams
from .physics import OnlineParams

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "pushadapt-checkpoint"
CHECKPOINT_VERSION = 1

NORM_SHAPES = {
    "input_mean": (INPUT_DIM,),
    "input_std": (INPUT_DIM,),
    "dp_mean": (2,),
    "dp_std": (1,),
    "dw_mean": (1,),
    "dw_std": (1,),
}


@dataclass
class Checkpoint:
    model: CombinedModel
    online_initial: OnlineParams
    baseline: MlpParams | None = None
    scores: dict[str, tuple[float, float]] = field(default_factory=dict)
    config_hash: str = ""
    seed: int = 0


def config_hash(config: dict) -> str:
    """sha256 от канонического JSON конфигурации."""
    payload = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _encode(array: np.ndarray) -> dict:
    array = np.ascontiguousarray(array, dtype="<f8")
    return {"shape": list(array.shape), "data": base64.b64encode(array.tobytes()).decode("ascii")}


def _decode(name: str, entry) -> np.ndarray:
    try:
        shape = tuple(int(n) for n in entry["shape"])
        raw = base64.b64decode(entry["data"], validate=True)
    except (KeyError, TypeError, ValueError, binascii.Error) as exc:
        raise CheckpointCorruptError(f"array {name!r} is unreadable: {exc}") from exc
    expected = int(np.prod(shape, dtype=int)) * 8
    if len(raw) != expected:
        raise CheckpointCorruptError(f"array {name!r} holds {len(raw)} bytes, shape {shape} needs {expected}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(float)


def _online_arrays(prefix: str, online: OnlineParams) -> dict[str, np.ndarray]:
    return {f"{prefix}.v": np.asarray(online.v, dtype=float), f"{prefix}.rho": np.array([online.rho])}


def checkpoint_save(checkpoint: Checkpoint, path) -> Path:
    path = Path(path)
    arrays: dict[str, np.ndarray] = {}
    arrays.update({f"mlp.{k}": v for k, v in checkpoint.model.mlp.named_arrays().items()})
    if checkpoint.baseline is not None:
        arrays.update({f"baseline.{k}": v for k, v in checkpoint.baseline.named_arrays().items()})
    arrays.update(_online_arrays("online", checkpoint.model.online))
    arrays.update(_online_arrays("online_initial", checkpoint.online_initial))
    arrays.update({f"norm.{k}": v for k, v in checkpoint.model.norm.named_arrays().items()})

    document = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "provenance": {"config_hash": checkpoint.config_hash, "seed": int(checkpoint.seed)},
        "scores": {name: [float(pos), float(rot)] for name, (pos, rot) in sorted(checkpoint.scores.items())},
        "arrays": {name: _encode(value) for name, value in sorted(arrays.items())},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("checkpoint written to %s", path)
    return path


def _check_shape(name: str, array: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if array.shape != shape:
        raise CheckpointShapeError(f"array {name!r} has shape {array.shape}, expected {shape}")
    return array


def _read_mlp(arrays: dict[str, np.ndarray], prefix: str, output_dim: int) -> MlpParams:
    layers = []
    in_dim = INPUT_DIM
    while f"{prefix}.layer{len(layers)}.weights" in arrays:
        index = len(layers)
        weights = arrays[f"{prefix}.layer{index}.weights"]
        biases = arrays.get(f"{prefix}.layer{index}.biases")
        if biases is None:
            raise CheckpointCorruptError(f"missing array {prefix}.layer{index}.biases")
        if weights.ndim != 2 or weights.shape[1] != in_dim:
            raise CheckpointShapeError(
                f"{prefix}.layer{index}.weights has shape {weights.shape}, expected (*, {in_dim})")
        _check_shape(f"{prefix}.layer{index}.biases", biases, (weights.shape[0],))
        layers.append(LayerParams(weights, biases))
        in_dim = weights.shape[0]
    if not layers:
        raise CheckpointCorruptError(f"checkpoint has no {prefix} layers")
    if in_dim != output_dim:
        raise CheckpointShapeError(f"{prefix} network emits {in_dim} outputs, expected {output_dim}")
    return MlpParams(layers)


def _read_online(arrays: dict[str, np.ndarray], prefix: str) -> OnlineParams:
    try:
        v = _check_shape(f"{prefix}.v", arrays[f"{prefix}.v"], (2,))
        rho = _check_shape(f"{prefix}.rho", arrays[f"{prefix}.rho"], (1,))
    except KeyError as exc:
        raise CheckpointCorruptError(f"missing array {exc.args[0]}") from None
    return OnlineParams(v.copy(), float(rho[0]))


def checkpoint_load(path) -> Checkpoint:
    """Чтение с проверкой формата, версии и форм всех массивов."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointCorruptError(f"{path} is not a readable checkpoint: {exc}") from exc
    if not isinstance(document, dict) or document.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointCorruptError(f"{path} is not a pushadapt checkpoint")
    version = document.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(version, CHECKPOINT_VERSION)
    entries = document.get("arrays")
    if not isinstance(entries, dict):
        raise CheckpointCorruptError(f"{path} has no arrays section")

    arrays = {name: _decode(name, entry) for name, entry in entries.items()}
    norm_arrays = {}
    for name, shape in NORM_SHAPES.items():
        key = f"norm.{name}"
        if key not in arrays:
            raise CheckpointCorruptError(f"missing array {key}")
        norm_arrays[name] = _check_shape(key, arrays[key], shape)

    mlp = _read_mlp(arrays, "mlp", CONTACT_OUTPUT_DIM)
    baseline = None
    if any(name.startswith("baseline.") for name in arrays):
        baseline = _read_mlp(arrays, "baseline", BASELINE_OUTPUT_DIM)
    provenance = document.get("provenance") or {}
    try:
        scores = {name: (float(pos), float(rot)) for name, (pos, rot) in (document.get("scores") or {}).items()}
    except (TypeError, ValueError) as exc:
        raise CheckpointCorruptError(f"{path} has malformed scores: {exc}") from exc

    model = CombinedModel(mlp, _read_online(arrays, "online"), NormStats.from_arrays(norm_arrays))
    return Checkpoint(
        model=model,
        online_initial=_read_online(arrays, "online_initial"),
        baseline=baseline,
        scores=scores,
        config_hash=str(provenance.get("config_hash", "")),
        seed=int(provenance.get("seed", 0)),
    )
