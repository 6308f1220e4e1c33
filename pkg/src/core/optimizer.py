"""Adam optimizer and learning-rate schedule

flat 파라미터 벡터에 대한 bias-corrected Adam과 step 단위 계단식 learning rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericsError

DEFAULT_BASE_LR = 1e-4
DEFAULT_DECAY_EVERY = 5000
DEFAULT_DECAY_FACTOR = 0.5


@dataclass
class AdamState:
    """Adam 1차/2차 moment와 step 카운터"""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int, dtype: np.dtype | str = np.float32) -> AdamState:
        return cls(m=np.zeros(size, dtype=dtype), v=np.zeros(size, dtype=dtype), t=0)

    def copy(self) -> AdamState:
        return AdamState(m=self.m.copy(), v=self.v.copy(), t=self.t)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.99,
    eps: float = 1e-8,
    step_scale: np.ndarray | None = None,
    active: np.ndarray | None = None,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update.

    Returns new arrays; the inputs are left untouched so a failed step can be
    discarded without rollback. Moments and the update are computed in float64
    and cast back to the parameter dtype.

    Args:
        step_scale: per-entry multiplier on the update (None → 1 everywhere)
        active: boolean mask; entries where it is False keep their value and
            both moments (lazy update of table rows no sample touched)
    """
    if not (params.shape == grads.shape == state.m.shape == state.v.shape):
        raise ConfigurationError(
            f"adam_step length mismatch: params {params.shape}, grads {grads.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )
    if lr <= 0:
        raise ConfigurationError(f"learning rate must be positive, got {lr}")

    finite = np.isfinite(grads)
    if not finite.all():
        bad = np.flatnonzero(~finite)
        raise NumericsError(
            f"{bad.size} non-finite gradient entries at step {state.t + 1} (first flat index {int(bad[0])})"
        )

    for name, extra in (("step_scale", step_scale), ("active", active)):
        if extra is not None and extra.shape != params.shape:
            raise ConfigurationError(f"adam_step {name} shape {extra.shape} does not match params {params.shape}")

    dtype = params.dtype
    t = state.t + 1
    g = grads.astype(np.float64, copy=False)
    m = beta1 * state.m.astype(np.float64) + (1.0 - beta1) * g
    v = beta2 * state.v.astype(np.float64) + (1.0 - beta2) * (g * g)

    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    step = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    if step_scale is not None:
        step = step * step_scale
    if active is not None:
        m = np.where(active, m, state.m)
        v = np.where(active, v, state.v)
        step = np.where(active, step, 0.0)

    updated = (params.astype(np.float64) - step).astype(dtype)
    return updated, AdamState(m=m.astype(state.m.dtype), v=v.astype(state.v.dtype), t=t)


def lr_at(
    step: int,
    base_lr: float = DEFAULT_BASE_LR,
    decay_every: int = DEFAULT_DECAY_EVERY,
    factor: float = DEFAULT_DECAY_FACTOR,
) -> float:
    """Learning rate halved every ``decay_every`` steps"""
    if step < 0:
        raise ConfigurationError(f"step must be non-negative, got {step}")
    return base_lr * factor ** (step // decay_every)
