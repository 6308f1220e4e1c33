"""2D image fitting task

픽셀 중심 좌표 ((c+0.5)/W, (r+0.5)/H)에서 RGB 값을 회귀합니다.
"""

from __future__ import annotations

import numpy as np

from src.core.errors import InputError
from src.core.field_model import FieldModel
from src.core.tape import Tape, Var

from .base import FieldTask, TaskType
from .metrics import psnr


def pixel_coords(rows: np.ndarray, cols: np.ndarray, height: int, width: int) -> np.ndarray:
    """Pixel centres mapped into (0,1)², x along columns and y along rows"""
    return np.stack([(cols + 0.5) / width, (rows + 0.5) / height], axis=-1)


def all_pixel_coords(height: int, width: int) -> np.ndarray:
    rows, cols = np.divmod(np.arange(height * width), width)
    return pixel_coords(rows, cols, height, width)


class ImageTask(FieldTask):
    """RGB image in [0,1], fitted with the per-item squared error"""

    task_type = TaskType.image
    n_input = 2
    d_out = 3

    def __init__(self, image: np.ndarray, batch_size: int, exhaustive: bool = False):
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] < 1 or image.shape[1] < 1:
            raise InputError(f"expected an H×W×3 image, got shape {image.shape}")
        if batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {batch_size}")
        if exhaustive and batch_size > image.shape[0] * image.shape[1]:
            raise InputError("exhaustive sampling needs batch_size <= number of pixels")
        super().__init__(batch_size)
        self.image = image
        self.exhaustive = exhaustive

    @property
    def height(self) -> int:
        return int(self.image.shape[0])

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    def sample_batch(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return sample_image_batch(self, rng)

    def loss(self, tape: Tape, prediction: Var, target: np.ndarray) -> Var:
        return tape.mse_loss(prediction, target)

    def render(self, model: FieldModel, chunk_size: int = 8192) -> np.ndarray:
        return render_image(model, self.height, self.width, chunk_size)

    def evaluate(self, model: FieldModel, chunk_size: int = 8192) -> float:
        return psnr(np.clip(self.render(model, chunk_size), 0.0, 1.0), self.image)


def sample_image_batch(task: ImageTask, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform pixel draw (with replacement), or a permutation prefix in exhaustive mode"""
    n_pixels = task.height * task.width
    if task.exhaustive:
        flat = rng.permutation(n_pixels)[: task.batch_size]
    else:
        flat = rng.integers(0, n_pixels, size=task.batch_size)
    rows, cols = np.divmod(flat, task.width)
    coords = pixel_coords(rows, cols, task.height, task.width)
    return coords, task.image[rows, cols]


def render_image(model: FieldModel, height: int, width: int, chunk_size: int = 8192) -> np.ndarray:
    """Query every pixel centre once; returns H×W×d_out (unclipped)"""
    values = model.predict(all_pixel_coords(height, width), chunk_size=chunk_size)
    return values.reshape(height, width, -1)


def render_levels(model: FieldModel, height: int, width: int, chunk_size: int = 8192) -> list[np.ndarray]:
    """Per-level outputs o_i rendered as images"""
    _, levels = model.predict(all_pixel_coords(height, width), chunk_size=chunk_size, levels=True)
    return [level.reshape(height, width, -1) for level in levels]
