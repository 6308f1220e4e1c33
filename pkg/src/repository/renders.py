"""Diagnostic renders

레벨별 출력 o_i, 누적 부분합 Σ_{j≤i} o_j, SDF의 z=0 단면 이미지를 씁니다.
SDF 단면은 matplotlib의 diverging colormap(RdBu_r)으로 0을 흰색에 맞춥니다.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib import colormaps
from matplotlib.colors import Normalize

from src.core.field_model import FieldModel
from src.pipeline.tasks.image_task import render_levels
from src.pipeline.tasks.sdf_task import to_unit_cube

from .image_io import save_image

SLICE_COLORMAP = "RdBu_r"


def slice_points(resolution: int, z: float = 0.0) -> np.ndarray:
    """Pixel centres of the z-slice over [−1,1]², row 0 at y = +1"""
    axis = (np.arange(resolution) + 0.5) / resolution * 2.0 - 1.0
    gy, gx = np.meshgrid(axis[::-1], axis, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)], axis=1)


def colorize_slice(values: np.ndarray) -> np.ndarray:
    """Signed values → RGB in [0,1]: inside blue, outside red, zero white"""
    values = np.asarray(values, dtype=np.float64)
    bound = float(np.max(np.abs(values))) if values.size else 0.0
    norm = Normalize(vmin=-bound, vmax=bound) if bound > 0 else Normalize(vmin=-1.0, vmax=1.0)
    rgba = colormaps[SLICE_COLORMAP](norm(values))
    return np.asarray(rgba)[..., :3]


def level_slices(model: FieldModel, resolution: int, chunk_size: int = 8192) -> tuple[np.ndarray, list[np.ndarray]]:
    """z=0 slice of the field and of each level output"""
    x = to_unit_cube(slice_points(resolution))
    value, levels = model.predict(x, chunk_size=chunk_size, levels=True)
    shape = (resolution, resolution)
    return value[:, 0].reshape(shape), [level[:, 0].reshape(shape) for level in levels]


def partial_sums(levels: list[np.ndarray]) -> list[np.ndarray]:
    """Σ_{j≤i} o_j for every i"""
    return list(np.cumsum(np.stack(levels, axis=0), axis=0)) if levels else []


def write_image_levels(
    model: FieldModel,
    height: int,
    width: int,
    out_dir: str | Path,
    suffix: str = ".ppm",
    chunk_size: int = 8192,
) -> list[Path]:
    """level_{i} and partial_{i} images for a 2D model"""
    out_dir = Path(out_dir)
    levels = render_levels(model, height, width, chunk_size)
    written: list[Path] = []
    for i, level in enumerate(levels):
        written.append(save_image(out_dir / f"level_{i}{suffix}", level))
    for i, partial in enumerate(partial_sums(levels)):
        written.append(save_image(out_dir / f"partial_{i}{suffix}", partial))
    return written


def write_sdf_slices(
    model: FieldModel,
    out_dir: str | Path,
    resolution: int = 256,
    suffix: str = ".ppm",
    chunk_size: int = 8192,
) -> list[Path]:
    """field, level_{i} and partial_{i} z=0 slices for a 3D model"""
    out_dir = Path(out_dir)
    field, levels = level_slices(model, resolution, chunk_size)
    written = [save_image(out_dir / f"slice{suffix}", colorize_slice(field))]
    for i, level in enumerate(levels):
        written.append(save_image(out_dir / f"level_{i}{suffix}", colorize_slice(level)))
    for i, partial in enumerate(partial_sums(levels)):
        written.append(save_image(out_dir / f"partial_{i}{suffix}", colorize_slice(partial)))
    return written
