"""Training loop

sample → forward_batch → loss → backward → adam_step(lr_at(step)) 루프입니다.
배치는 고정 크기 chunk로 나누어 worker pool에서 forward/backward하고,
chunk gradient는 worker 수와 관계없이 chunk 순서대로 합산합니다.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from src.config.settings import settings
from src.core.errors import NumericsError
from src.core.field_model import FieldModel
from src.core.optimizer import (
    DEFAULT_BASE_LR,
    DEFAULT_DECAY_EVERY,
    DEFAULT_DECAY_FACTOR,
    AdamState,
    adam_step,
    lr_at,
)
from src.models.entities import MetricsRow
from src.pipeline.tasks.base import FieldTask
from src.utils.logger import get_logger, set_step

logger = get_logger(__name__)

SAMPLING_STREAM = 1

CheckpointWriter = Callable[[FieldModel, AdamState, int], Path]


@dataclass
class TrainOptions:
    """학습 루프 설정"""

    log_every: int = 100
    checkpoint_every: int = 0
    deterministic: bool = False
    base_lr: float = DEFAULT_BASE_LR
    lr_decay_every: int = DEFAULT_DECAY_EVERY
    lr_decay_factor: float = DEFAULT_DECAY_FACTOR
    beta1: float = 0.9
    beta2: float = 0.99
    adam_eps: float = 1e-8
    sparse_tables: bool = True
    scale_sine_lr: bool = True
    chunk_size: int = field(default_factory=lambda: settings.chunk_size)
    threads: int = field(default_factory=lambda: settings.threads)


@dataclass
class TrainResult:
    model: FieldModel
    state: AdamState
    step: int
    loss: float = math.nan
    metrics: list[MetricsRow] = field(default_factory=list)
    checkpoints: list[Path] = field(default_factory=list)


def sampling_rng(seed: int, step: int) -> np.random.Generator:
    """Batch stream for one step; depends only on (seed, step) so resumed runs redraw the same batches"""
    return np.random.default_rng([seed, SAMPLING_STREAM, step])


def _chunk_gradient(
    model: FieldModel,
    task: FieldTask,
    x: np.ndarray,
    y: np.ndarray,
    weight: float,
) -> tuple[float, np.ndarray]:
    out, tape = model.forward_batch(x)
    loss = task.loss(tape, out.value, y)
    return float(loss.value) * weight, tape.backward(weight)


def compute_gradients(
    model: FieldModel,
    task: FieldTask,
    x: np.ndarray,
    y: np.ndarray,
    chunk_size: int,
    executor: ThreadPoolExecutor | None = None,
) -> tuple[float, np.ndarray]:
    """Batch-mean loss and its float64 gradient, reduced over chunks in chunk order"""
    batch = x.shape[0]
    bounds = [(start, min(start + chunk_size, batch)) for start in range(0, batch, chunk_size)]
    jobs = [(x[lo:hi], y[lo:hi], (hi - lo) / batch) for lo, hi in bounds]

    if executor is None or len(jobs) == 1:
        results = [_chunk_gradient(model, task, *job) for job in jobs]
    else:
        results = list(executor.map(lambda job: _chunk_gradient(model, task, *job), jobs))

    loss = 0.0
    grads = np.zeros(model.params.size, dtype=np.float64)
    for chunk_loss, chunk_grads in results:
        loss += chunk_loss
        grads += chunk_grads
    return loss, grads


def train(
    task: FieldTask,
    model: FieldModel,
    steps: int,
    seed: int,
    options: TrainOptions | None = None,
    state: AdamState | None = None,
    start_step: int = 0,
    checkpoint_writer: Optional[CheckpointWriter] = None,
    on_row: Optional[Callable[[MetricsRow], None]] = None,
) -> TrainResult:
    """Run ``steps`` optimizer steps starting after ``start_step`` completed ones.

    Args:
        task: 배치 샘플링/손실/평가를 제공하는 작업
        model: 학습할 모델 (파라미터는 제자리에서 갱신)
        steps: 이번 호출에서 수행할 step 수
        seed: 샘플링 스트림 seed
        options: 학습 루프 설정
        state: 이어서 학습할 Adam 상태 (None이면 0에서 시작)
        start_step: 이미 완료된 step 수 (resume)
        checkpoint_writer: (model, state, step) → 저장 경로
        on_row: metrics row가 생길 때마다 호출

    Returns:
        TrainResult
    """
    options = options or TrainOptions()
    state = state if state is not None else AdamState.zeros(model.params.size, model.params.dtype)
    result = TrainResult(model=model, state=state, step=start_step)
    if steps <= 0:
        return result

    last_good: Path | None = None
    started = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=options.threads) if options.threads > 1 else None
    step_scale = model.sine_step_scales() if options.scale_sine_lr else None
    tables = model.table_mask() if options.sparse_tables else None

    try:
        for step in range(start_step, start_step + steps):
            set_step(step + 1)
            x, y = task.sample_batch(sampling_rng(seed, step))
            loss, grads = compute_gradients(model, task, x, y, options.chunk_size, executor)
            if not math.isfinite(loss):
                if checkpoint_writer is not None and last_good is None:
                    last_good = checkpoint_writer(model, result.state, step)
                raise NumericsError(f"non-finite loss {loss} at step {step + 1}", checkpoint=last_good)

            lr = lr_at(step, options.base_lr, options.lr_decay_every, options.lr_decay_factor)
            active = None if tables is None else ~tables | (grads != 0.0)
            try:
                updated, new_state = adam_step(
                    model.params.data,
                    grads,
                    result.state,
                    lr,
                    options.beta1,
                    options.beta2,
                    options.adam_eps,
                    step_scale=step_scale,
                    active=active,
                )
            except NumericsError as e:
                if checkpoint_writer is not None and last_good is None:
                    last_good = checkpoint_writer(model, result.state, step)
                raise NumericsError(str(e), checkpoint=last_good) from e
            model.params.assign(updated)
            result.state = new_state
            result.step = step + 1
            result.loss = loss

            if options.log_every > 0 and result.step % options.log_every == 0:
                elapsed = time.perf_counter() - started
                row = MetricsRow(
                    step=result.step,
                    loss=loss,
                    metric=task.evaluate(model, options.chunk_size),
                    lr=lr,
                    wall_seconds=0.0 if options.deterministic else elapsed,
                )
                result.metrics.append(row)
                logger.info(
                    f"loss={row.loss:.6g} metric={row.metric:.4f} lr={row.lr:.3g} ({elapsed:.1f}s)"
                )
                if on_row is not None:
                    on_row(row)

            if (
                checkpoint_writer is not None
                and options.checkpoint_every > 0
                and result.step % options.checkpoint_every == 0
            ):
                last_good = checkpoint_writer(model, result.state, result.step)
                result.checkpoints.append(last_good)
    finally:
        set_step(None)
        if executor is not None:
            executor.shutdown(wait=True)

    return result
