"""Training tasks: 2D image fitting and 3D SDF regression."""

from .base import FieldTask, TaskType
from .image_task import ImageTask, render_image, render_levels, sample_image_batch
from .metrics import psnr, ssim
from .oracles import SdfOracle, ShapeType, analytic_sdf
from .sdf_task import SdfTask, sample_sdf_batch, sdf_eval_metrics

__all__ = [
    "FieldTask",
    "TaskType",
    "ImageTask",
    "render_image",
    "render_levels",
    "sample_image_batch",
    "psnr",
    "ssim",
    "SdfOracle",
    "ShapeType",
    "analytic_sdf",
    "SdfTask",
    "sample_sdf_batch",
    "sdf_eval_metrics",
]
