"""3D signed distance regression task

배치마다 20%는 볼륨 내 균일 샘플, 30%는 표면 근처(표면점 + Gaussian 노이즈),
나머지는 표면 위 샘플로 구성합니다. 좌표는 [−1,1]³에서 [0,1]³로 옮겨 모델에 넣습니다.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from src.core.errors import ConfigurationError, InputError
from src.core.field_model import FieldModel
from src.core.tape import Tape, Var
from src.models.entities import SdfEvalReport

from .base import FieldTask, TaskType
from .oracles import SdfOracle

DEFAULT_SPLIT = (0.2, 0.3, 0.5)
EVAL_STREAM = 2


def to_unit_cube(p: np.ndarray) -> np.ndarray:
    """[−1,1]³ → [0,1]³"""
    return (np.asarray(p) + 1.0) * 0.5


def split_counts(batch_size: int, split: tuple[float, float, float] = DEFAULT_SPLIT) -> tuple[int, int, int]:
    """(uniform, near-surface, on-surface) counts: floor the uniform and surface shares, near takes the rest"""
    n_uniform = int(math.floor(split[0] * batch_size + 1e-9))
    n_surface = int(math.floor(split[2] * batch_size + 1e-9))
    return n_uniform, batch_size - n_uniform - n_surface, n_surface


class SdfTask(FieldTask):
    """Signed distance regression with the squared relative-error loss"""

    task_type = TaskType.sdf
    n_input = 3
    d_out = 1

    def __init__(
        self,
        oracle: SdfOracle | None,
        batch_size: int,
        split: tuple[float, float, float] = DEFAULT_SPLIT,
        near_surface_sigma: float = 0.01,
        epsilon: float = 0.01,
        eval_batch_size: int = 4096,
        eval_seed: int = 0,
    ):
        if oracle is None:
            raise ConfigurationError("SDF task needs an oracle")
        if batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {batch_size}")
        if len(split) != 3 or any(s < 0 for s in split) or not math.isclose(sum(split), 1.0, abs_tol=1e-9):
            raise ConfigurationError(f"sampling split must be three non-negative fractions summing to 1, got {split}")
        if epsilon <= 0:
            raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
        super().__init__(batch_size)
        self.oracle = oracle
        self.split = tuple(split)
        self.near_surface_sigma = near_surface_sigma
        self.epsilon = epsilon
        self.eval_batch_size = eval_batch_size
        self.eval_seed = eval_seed
        self._eval_batch: tuple[np.ndarray, np.ndarray] | None = None

    def sample_batch(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        points, sdf = sample_sdf_batch(self, rng)
        return to_unit_cube(points), sdf[:, None]

    def loss(self, tape: Tape, prediction: Var, target: np.ndarray) -> Var:
        return tape.mape_sq_loss(prediction, target, self.epsilon)

    def evaluate(self, model: FieldModel, chunk_size: int = 8192) -> float:
        """Mean squared MAPE on a fixed evaluation batch"""
        if self._eval_batch is None:
            rng = np.random.default_rng([self.eval_seed, EVAL_STREAM])
            points, sdf = sample_sdf_batch(self, rng, self.eval_batch_size)
            self._eval_batch = (to_unit_cube(points), sdf)
        x, sdf = self._eval_batch
        pred = model.predict(x, chunk_size=chunk_size)[:, 0].astype(np.float64)
        return float(np.mean((pred - sdf) ** 2 / (self.epsilon + sdf * sdf)))


def sample_sdf_batch(
    task: SdfTask,
    rng: np.random.Generator,
    batch_size: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Points in [−1,1]³ (uniform, near-surface, on-surface blocks in that order) and oracle labels"""
    batch_size = task.batch_size if batch_size is None else batch_size
    n_uniform, n_near, n_surface = split_counts(batch_size, task.split)

    uniform = rng.uniform(-1.0, 1.0, size=(n_uniform, 3))
    near = task.oracle.sample_surface(rng, n_near) + rng.normal(0.0, task.near_surface_sigma, size=(n_near, 3))
    near = np.clip(near, -1.0, 1.0)
    surface = task.oracle.sample_surface(rng, n_surface)

    labels = np.concatenate(
        [
            task.oracle.distance(uniform) if n_uniform else np.zeros(0),
            task.oracle.distance(near) if n_near else np.zeros(0),
            np.zeros(n_surface),
        ]
    )
    points = np.concatenate([uniform, near, surface], axis=0)
    return points, labels


def field_predictor(model: FieldModel, chunk_size: int = 8192) -> Callable[[np.ndarray], np.ndarray]:
    """Model as a signed field over [−1,1]³"""

    def _predict(points: np.ndarray) -> np.ndarray:
        return model.predict(to_unit_cube(points), chunk_size=chunk_size)[:, 0].astype(np.float64)

    return _predict


def grid_centers(k: int) -> np.ndarray:
    """Centres of a k³ voxel grid over [−1,1]³"""
    axis = (np.arange(k) + 0.5) / k * 2.0 - 1.0
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


def sdf_eval_metrics(
    predict: Callable[[np.ndarray], np.ndarray],
    oracle: SdfOracle,
    n_samples: int = 10_000,
    grid: int = 64,
    rng: np.random.Generator | None = None,
) -> SdfEvalReport:
    """Median |prediction| on fresh surface samples and inside-voxel IoU on a grid³ lattice"""
    if grid < 2:
        raise InputError(f"IoU grid must be at least 2, got {grid}")
    rng = rng if rng is not None else np.random.default_rng([0, EVAL_STREAM])

    surface = oracle.sample_surface(rng, n_samples)
    surface_error = float(np.median(np.abs(predict(surface))))

    centers = grid_centers(grid)
    inside_pred = predict(centers) < 0.0
    inside_gt = oracle.distance(centers) < 0.0
    union = np.count_nonzero(inside_pred | inside_gt)
    iou = 1.0 if union == 0 else np.count_nonzero(inside_pred & inside_gt) / union

    return SdfEvalReport(surface_error=surface_error, iou=float(iou), n_samples=n_samples, grid=grid)
