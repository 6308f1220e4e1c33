"""Experiment orchestration

CLI 하위 명령(fit, eval, ablate, sweep, dump-levels)의 실제 작업을 수행합니다.
각 함수는 RunConfig 하나로 task/model/출력 경로를 결정하며, 한 번에 하나의 실행만 진행합니다.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import orjson

from src.config.run_config import RunConfig
from src.config.settings import settings
from src.core.errors import ConfigurationError
from src.core.field_model import FieldModel, VariantType, make_variant
from src.core.optimizer import AdamState
from src.models.entities import AblationRow, ImageEvalReport, MetricsRow, SdfEvalReport, SweepRow
from src.pipeline.tasks.base import FieldTask, TaskType
from src.pipeline.tasks.image_task import ImageTask
from src.pipeline.tasks.metrics import psnr, ssim
from src.pipeline.tasks.oracles import SampledPointOracle, SdfOracle, ShapeType, Union, make_shape
from src.pipeline.tasks.sdf_task import EVAL_STREAM, SdfTask, field_predictor, sdf_eval_metrics
from src.pipeline.trainer import TrainOptions, train
from src.repository.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from src.repository.image_io import load_image, save_image
from src.repository.metrics_csv import MetricsWriter
from src.repository.point_file import load_points
from src.repository.renders import colorize_slice, level_slices, write_image_levels, write_sdf_slices
from src.utils.logger import get_logger, run_context

logger = get_logger(__name__)

SLICE_RESOLUTION = 256


@dataclass
class FitResult:
    model: FieldModel
    step: int
    final_loss: float
    metric: float
    metrics_path: Path
    checkpoint_path: Path
    render_path: Path
    metrics: list[MetricsRow] = field(default_factory=list)


def build_oracle(config: RunConfig) -> SdfOracle:
    """SDF oracle described by the [sdf] section"""
    sdf = config.sdf
    if sdf.shape == ShapeType.file:
        if not sdf.points_path:
            raise ConfigurationError("shape = file needs points_path")
        points, values = load_points(sdf.points_path)
        return SampledPointOracle(points, values, sdf.surface_tolerance)

    def primitive(shape: ShapeType, center) -> SdfOracle:
        return make_shape(
            shape,
            radius=sdf.radius,
            half_extents=sdf.half_extents,
            major_radius=sdf.major_radius,
            minor_radius=sdf.minor_radius,
            center=center,
        )

    if sdf.shape == ShapeType.union:
        return Union(primitive(sdf.union_a, sdf.center_a), primitive(sdf.union_b, sdf.center_b))
    return primitive(sdf.shape, sdf.center)


def build_task(config: RunConfig, image: np.ndarray | None = None) -> FieldTask:
    if config.run.task == TaskType.image:
        if image is None:
            config.require_inputs()
            image = load_image(config.image.image_path)
        return ImageTask(image, config.run.batch_size, exhaustive=config.image.exhaustive)
    return SdfTask(
        build_oracle(config),
        config.run.batch_size,
        split=config.sdf.split,
        near_surface_sigma=config.sdf.near_surface_sigma,
        epsilon=config.sdf.epsilon,
        eval_batch_size=config.sdf.eval_batch_size,
        eval_seed=config.run.seed,
    )


def train_options(config: RunConfig) -> TrainOptions:
    optim = config.optim
    return TrainOptions(
        log_every=config.run.log_every,
        checkpoint_every=config.run.checkpoint_every,
        deterministic=config.run.deterministic,
        base_lr=optim.base_lr,
        lr_decay_every=optim.lr_decay_every,
        lr_decay_factor=optim.lr_decay_factor,
        beta1=optim.beta1,
        beta2=optim.beta2,
        adam_eps=optim.adam_eps,
        sparse_tables=optim.sparse_tables,
        scale_sine_lr=optim.scale_sine_lr,
    )


def _render_suffix(config: RunConfig) -> str:
    path = config.image.image_path
    return ".png" if path and Path(path).suffix.lower() == ".png" else ".ppm"


def write_final_render(model: FieldModel, task: FieldTask, out_dir: Path, suffix: str = ".ppm") -> Path:
    """Full-resolution render (image task) or the z=0 slice (SDF task)"""
    if isinstance(task, ImageTask):
        return save_image(out_dir / f"render{suffix}", np.clip(task.render(model, settings.chunk_size), 0.0, 1.0))
    values, _ = level_slices(model, SLICE_RESOLUTION, settings.chunk_size)
    return save_image(out_dir / f"slice{suffix}", colorize_slice(values))


def _resume_from(config: RunConfig, path: Path) -> Checkpoint:
    checkpoint = load_checkpoint(path)
    if checkpoint.model.config != config.filter_bank_config() or checkpoint.model.variant != config.run.variant:
        raise ConfigurationError(f"checkpoint {path} was trained with a different model config or variant")
    if checkpoint.step > config.run.steps:
        raise ConfigurationError(f"checkpoint is at step {checkpoint.step}, beyond steps = {config.run.steps}")
    return checkpoint


def fit(
    config: RunConfig,
    image: np.ndarray | None = None,
    resume: str | Path | None = None,
) -> FitResult:
    """Train per ``config``; writes metrics.csv, the final render and model.ckpt under run.output_dir.

    With ``resume`` training continues from a checkpoint up to ``run.steps`` total steps.
    """
    out_dir = Path(config.run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = build_task(config, image)

    state: Optional[AdamState] = None
    start_step = 0
    if resume is not None:
        checkpoint = _resume_from(config, Path(resume))
        model, state, start_step = checkpoint.model, checkpoint.state, checkpoint.step
        logger.info(f"Resuming from {resume} at step {start_step}")
    else:
        model = make_variant(config.filter_bank_config(), config.run.variant)
    logger.info(
        f"Training {config.run.variant.value} on {config.run.task.value}: "
        f"{model.parameter_count} parameters, {config.run.steps} steps"
    )

    metrics_path = out_dir / settings.metrics_filename
    writer = MetricsWriter(metrics_path, resume_step=start_step if resume is not None else None)

    def write_checkpoint(m: FieldModel, s: AdamState, step: int) -> Path:
        return save_checkpoint(m, s, out_dir / "checkpoints" / f"step_{step:07d}.ckpt", step, config)

    with run_context(f"{out_dir.name}/{config.run.variant.value}"):
        result = train(
            task,
            model,
            steps=config.run.steps - start_step,
            seed=config.run.seed,
            options=train_options(config),
            state=state,
            start_step=start_step,
            checkpoint_writer=write_checkpoint,
            on_row=writer.write,
        )

    checkpoint_path = save_checkpoint(
        model, result.state, out_dir / settings.checkpoint_filename, result.step, config
    )
    render_path = write_final_render(model, task, out_dir, _render_suffix(config))
    metric = result.metrics[-1].metric if result.metrics and result.metrics[-1].step == result.step else None
    if metric is None:
        metric = task.evaluate(model, settings.chunk_size)

    return FitResult(
        model=model,
        step=result.step,
        final_loss=result.loss,
        metric=metric,
        metrics_path=metrics_path,
        checkpoint_path=checkpoint_path,
        render_path=render_path,
        metrics=result.metrics,
    )


def _checkpoint_config(
    checkpoint: Checkpoint,
    config: RunConfig | None,
    overrides: Mapping[str, Any] | None,
) -> RunConfig | None:
    """Explicit config, else the one saved with the checkpoint, with ``overrides`` applied on top"""
    config = config or checkpoint.run_config
    if overrides and any(value is not None for value in overrides.values()):
        config = (config or RunConfig()).with_overrides(**overrides)
    return config


def evaluate(
    checkpoint_path: str | Path,
    config: RunConfig | None = None,
    image: np.ndarray | None = None,
    render_to: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ImageEvalReport | SdfEvalReport:
    """PSNR/SSIM of a render (image task) or surface error and IoU (SDF task) of a checkpoint.

    ``overrides`` (e.g. image_path, points_path) replace individual keys of the
    checkpoint's run config, so its seed and evaluation settings carry over.
    """
    checkpoint = load_checkpoint(checkpoint_path)
    config = _checkpoint_config(checkpoint, config, overrides)
    if config is None:
        raise ConfigurationError(f"checkpoint {checkpoint_path} carries no run config; pass --config")
    model = checkpoint.model

    if model.config.n_input == 2:
        if image is None:
            config.require_inputs()
            image = load_image(config.image.image_path)
        task = ImageTask(image, batch_size=1)
        render = np.clip(task.render(model, settings.chunk_size), 0.0, 1.0)
        if render_to is not None:
            save_image(render_to, render)
        return ImageEvalReport(
            psnr=psnr(render, image), ssim=ssim(render, image), height=task.height, width=task.width
        )

    oracle = build_oracle(config)
    if render_to is not None:
        values, _ = level_slices(model, SLICE_RESOLUTION, settings.chunk_size)
        save_image(render_to, colorize_slice(values))
    return sdf_eval_metrics(
        field_predictor(model, settings.chunk_size),
        oracle,
        n_samples=config.sdf.eval_samples,
        grid=config.sdf.eval_grid,
        rng=np.random.default_rng([config.run.seed, EVAL_STREAM]),
    )


def ablate(config: RunConfig, image: np.ndarray | None = None) -> list[AblationRow]:
    """Fit every variant with the same seed and hyperparameters; one row per variant"""
    base_dir = Path(config.run.output_dir)
    rows: list[AblationRow] = []
    for variant in VariantType:
        run = config.with_overrides(variant=variant, output_dir=str(base_dir / variant.value))
        fitted = fit(run, image=image)
        rows.append(
            AblationRow(
                variant=variant.value,
                parameters=fitted.model.parameter_count,
                final_loss=fitted.final_loss,
                metric=fitted.metric,
            )
        )
        logger.info(f"{variant.value}: metric={fitted.metric:.4f} ({fitted.model.parameter_count} parameters)")
    write_report(base_dir / "ablation.json", rows)
    return rows


def sweep(config: RunConfig, param: str, values: list[float], image: np.ndarray | None = None) -> list[SweepRow]:
    """One fit per value of ``param``; each run gets its own output directory and metrics file"""
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    base_dir = Path(config.run.output_dir)
    rows: list[SweepRow] = []
    for value in values:
        run = config.with_param(param, value)
        run = run.with_overrides(output_dir=str(base_dir / f"{param}_{value:g}"))
        fitted = fit(run, image=image)
        rows.append(
            SweepRow(
                param=param,
                value=float(value),
                parameters=fitted.model.parameter_count,
                final_loss=fitted.final_loss,
                metric=fitted.metric,
                metrics_path=str(fitted.metrics_path),
            )
        )
    write_report(base_dir / f"sweep_{param}.json", rows)
    return rows


def dump_levels(
    checkpoint_path: str | Path,
    out_dir: str | Path,
    config: RunConfig | None = None,
    size: tuple[int, int] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> list[Path]:
    """Per-level outputs and partial sums of a checkpoint as images"""
    checkpoint = load_checkpoint(checkpoint_path)
    config = _checkpoint_config(checkpoint, config, overrides)
    model = checkpoint.model
    suffix = _render_suffix(config) if config is not None else ".ppm"

    if model.config.n_input == 3:
        return write_sdf_slices(model, out_dir, SLICE_RESOLUTION, suffix, settings.chunk_size)
    if size is None:
        if config is None or not config.image.image_path:
            raise ConfigurationError("dump-levels on an image model needs the image (or its size)")
        height, width = load_image(config.image.image_path).shape[:2]
    else:
        height, width = size
    return write_image_levels(model, height, width, out_dir, suffix, settings.chunk_size)


def write_report(path: Path, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(rows, list):
        payload = [row.model_dump() for row in rows]
    else:
        payload = rows.model_dump()
    path.write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
    return path
