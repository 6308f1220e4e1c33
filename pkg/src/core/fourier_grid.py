"""Fourier grid features

레벨별 학습 가능한 주파수 행렬 B로 보간된 grid feature를 sin 인코딩합니다.
finer 레벨일수록 큰 표준편차로 초기화해 높은 주파수 대역을 담당하도록 유도합니다.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .tape import Tape, Var

TWO_PI = 2.0 * np.pi


@dataclass
class FourierLayer:
    """Frequency matrix B (m × F) of one level, stored in ModelParams under ``matrix_name``"""

    level_index: int
    sigma: float
    matrix_name: str
    width: int
    n_features: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.n_features)


def level_sigma(level: int, sigma_min: float, c_f: float) -> float:
    """``σ_l = σ_min · c_f^l`` (standard deviation of the init Gaussian)"""
    return sigma_min * c_f**level


def init_fourier(
    level: int,
    width: int,
    n_features: int,
    sigma_min: float,
    c_f: float,
    rng: np.random.Generator,
    matrix_name: str | None = None,
    dtype: np.dtype | str = np.float32,
) -> tuple[FourierLayer, np.ndarray]:
    """Create the layer descriptor and its initial B drawn from N(0, σ_l²)"""
    if width < 1 or n_features < 1:
        raise ConfigurationError(f"Fourier layer needs positive sizes, got m={width}, F={n_features}")
    if sigma_min <= 0:
        raise ConfigurationError(f"sigma_min must be positive, got {sigma_min}")
    if c_f < 1.0:
        raise ConfigurationError(f"c_f must be >= 1, got {c_f}")

    sigma = level_sigma(level, sigma_min, c_f)
    layer = FourierLayer(
        level_index=level,
        sigma=sigma,
        matrix_name=matrix_name or f"fourier.{level}.B",
        width=width,
        n_features=n_features,
    )
    matrix = rng.normal(0.0, sigma, size=layer.shape).astype(dtype)
    return layer, matrix


def fourier_encode(tape: Tape, v: Var, layer: FourierLayer) -> Var:
    """``γ_j = sin(2π ⟨B_j, v⟩)`` for every row of ``v``"""
    B = tape.param(layer.matrix_name)
    if v.value.shape[1] != B.shape[1]:
        raise ConfigurationError(f"Fourier encode mismatch: features {v.value.shape} vs B {B.shape}")
    phase = TWO_PI * (v.value @ B.T)
    out = np.sin(phase)
    v_value = v.value

    def _backward(upstream: np.ndarray):
        dv, dB = fourier_backward(v_value, B, phase, upstream)
        tape.accumulate(layer.matrix_name, dB)
        return (dv,)

    return tape.record("fourier_encode", out, (v,), _backward)


def fourier_backward(
    v: np.ndarray,
    B: np.ndarray,
    phase: np.ndarray,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the encoding w.r.t. the grid features and B"""
    scaled = upstream * (TWO_PI * np.cos(phase))
    return scaled @ B, scaled.T @ v
