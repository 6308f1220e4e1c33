"""Field model abstraction

filter bank 모델과 ablation variant들이 공유하는 설정, 추상 클래스, 팩토리를 제공합니다.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError, InputError
from .hash_grid import GridLevel, GridLevelConfig
from .params import ModelParams
from .tape import Tape, Var

INIT_STREAM = 0


class VariantType(str, Enum):
    """모델 variant"""

    full = "full"
    only_grid = "only_grid"
    grid_ff = "grid_ff"
    only_mlp = "only_mlp"


class Precision(str, Enum):
    """연산 정밀도"""

    float32 = "float32"
    float64 = "float64"


class FilterBankConfig(BaseModel):
    """Hyperparameters that fully determine model construction"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_input: int = Field(default=2, ge=2, le=3)
    d_out: int = Field(default=3, ge=1)
    n_levels: int = Field(default=8, ge=1)
    width: int = Field(default=96, ge=1)
    alpha: float = Field(default=100.0, gt=0)
    alpha_per_layer: Optional[list[float]] = None

    # grid
    n_min: int = Field(default=64, ge=1)
    c_g: float = Field(default=1.5, ge=1.0)
    log2_hashmap_size: int = Field(default=19, ge=1, le=30)
    n_features: int = Field(default=2, ge=1)

    # fourier
    sigma_min: float = Field(default=5.0, gt=0)
    c_f: float = Field(default=2.0, ge=1.0)

    seed: int = Field(default=0, ge=0)
    precision: Precision = Precision.float32

    @model_validator(mode="after")
    def _check_alpha_layers(self) -> FilterBankConfig:
        if self.alpha_per_layer is not None:
            if len(self.alpha_per_layer) != self.n_levels:
                raise ValueError(
                    f"alpha_per_layer has {len(self.alpha_per_layer)} entries for {self.n_levels} levels"
                )
            if any(a <= 0 for a in self.alpha_per_layer):
                raise ValueError("alpha_per_layer entries must be positive")
        return self

    @classmethod
    def from_values(cls, **values: Any) -> FilterBankConfig:
        """pydantic 검증 오류를 ConfigurationError로 변환해 생성"""
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid filter bank config: {e}") from e

    @property
    def t_max(self) -> int:
        return 2**self.log2_hashmap_size

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.precision.value)

    def alpha_for(self, layer: int) -> float:
        if self.alpha_per_layer is not None:
            return float(self.alpha_per_layer[layer])
        return float(self.alpha)

    def grid_level(self, level: int) -> GridLevelConfig:
        return GridLevelConfig(
            level_index=level,
            n_min=self.n_min,
            c_g=self.c_g,
            t_max=self.t_max,
            n_features=self.n_features,
            n_input=self.n_input,
        )


@dataclass
class FieldOutput:
    """Recorded output of one forward pass"""

    value: Var
    levels: list[Var]
    hidden: list[Var] = field(default_factory=list)


def init_rng(config: FilterBankConfig) -> np.random.Generator:
    """Initialization stream, independent of the sampling streams"""
    return np.random.default_rng([config.seed, INIT_STREAM])


def build_grid_levels(config: FilterBankConfig) -> list[GridLevel]:
    return [
        GridLevel(config=config.grid_level(level), table_name=f"grid.{level}.table")
        for level in range(config.n_levels)
    ]


def uniform(rng: np.random.Generator, bound: float, shape: tuple[int, ...]) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


def sine_layer_init(
    rng: np.random.Generator,
    fan_in: int,
    fan_out: int,
    alpha: float,
    first: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Weights ±1/fan_in on the first layer, ±√(6/fan_in)/α after it; biases ±1/√fan_in"""
    bound = 1.0 / fan_in if first else math.sqrt(6.0 / fan_in) / alpha
    weight = uniform(rng, bound, (fan_out, fan_in))
    bias = uniform(rng, 1.0 / math.sqrt(fan_in), (fan_out,))
    return weight, bias


def head_init(rng: np.random.Generator, width: int, d_out: int) -> tuple[np.ndarray, np.ndarray]:
    bound = 1.0 / math.sqrt(width)
    return uniform(rng, bound, (d_out, width)), uniform(rng, bound, (d_out,))


class FieldModel(ABC):
    """Neural field over ``[0,1]^n`` with trainable ModelParams.

    모든 variant 구현체는 이 클래스를 상속받아 ``record``를 구현해야 합니다.
    """

    variant: VariantType

    def __init__(self, config: FilterBankConfig, params: ModelParams):
        self.config = config
        self.params = params

    @classmethod
    @abstractmethod
    def build(cls, config: FilterBankConfig, rng: np.random.Generator) -> FieldModel:
        """Construct with freshly initialized parameters"""
        pass

    @abstractmethod
    def record(self, tape: Tape, x: np.ndarray) -> FieldOutput:
        """Record the forward pass for a batch of points on ``tape``"""
        pass

    @property
    def parameter_count(self) -> int:
        return self.params.size

    def sine_step_scales(self) -> np.ndarray:
        """Flat Adam step multipliers: 1/α on ``mlp.{i}.weight`` (used as sin(α·W·g + b)), 1 elsewhere"""
        scales = np.ones(self.params.size, dtype=np.float64)
        for layer in range(self.config.n_levels):
            name = f"mlp.{layer}.weight"
            if name in self.params:
                spec = self.params.spec(name)
                scales[spec.offset : spec.stop] = 1.0 / self.config.alpha_for(layer)
        return scales

    def table_mask(self) -> np.ndarray:
        """Flat boolean mask of the hash table entries"""
        mask = np.zeros(self.params.size, dtype=bool)
        for spec in self.params.specs:
            if spec.name.endswith(".table"):
                mask[spec.offset : spec.stop] = True
        return mask

    def _check_points(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.params.dtype)
        if x.ndim != 2 or x.shape[1] != self.config.n_input:
            raise InputError(f"expected points of shape (B, {self.config.n_input}), got {x.shape}")
        if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
            raise InputError("field inputs must lie in [0, 1]^n")
        return x

    def forward_batch(self, x: np.ndarray, tape: Tape | None = None) -> tuple[FieldOutput, Tape]:
        """Record a batch forward pass; the returned tape is ready for a loss + backward"""
        x = self._check_points(x)
        tape = tape if tape is not None else Tape(params=self.params)
        return self.record(tape, x), tape

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Field value and per-level outputs at a single point"""
        out, _ = self.forward_batch(np.asarray(x).reshape(1, -1))
        return out.value.value[0], [level.value[0] for level in out.levels]

    def predict(self, x: np.ndarray, chunk_size: int = 8192, levels: bool = False):
        """Evaluate without keeping tapes around, chunk by chunk"""
        x = self._check_points(x)
        values: list[np.ndarray] = []
        per_level: list[list[np.ndarray]] = []
        for start in range(0, x.shape[0], chunk_size):
            out, _ = self.forward_batch(x[start : start + chunk_size])
            values.append(out.value.value)
            if levels:
                per_level.append([lv.value for lv in out.levels])
        if not values:
            empty = np.zeros((0, self.config.d_out), dtype=self.params.dtype)
            return (empty, []) if levels else empty
        value = np.concatenate(values, axis=0)
        if not levels:
            return value
        stacked = [np.concatenate([chunk[i] for chunk in per_level], axis=0) for i in range(len(per_level[0]))]
        return value, stacked


def make_variant(
    config: FilterBankConfig,
    variant: VariantType | str = VariantType.full,
    rng: np.random.Generator | None = None,
) -> FieldModel:
    """Variant 팩토리 함수

    Args:
        config: 모델 설정
        variant: full | only_grid | grid_ff | only_mlp
        rng: 초기화 난수 생성기 (None이면 config.seed에서 생성)

    Returns:
        FieldModel 인스턴스
    """
    try:
        variant = VariantType(variant)
    except ValueError as e:
        raise ConfigurationError(f"Unsupported model variant: {variant}") from e
    rng = rng if rng is not None else init_rng(config)

    if variant == VariantType.full:
        from .filter_bank import FilterBankModel

        return FilterBankModel.build(config, rng)
    elif variant == VariantType.only_grid:
        from .ablations import OnlyGridModel

        return OnlyGridModel.build(config, rng)
    elif variant == VariantType.grid_ff:
        from .ablations import GridFourierModel

        return GridFourierModel.build(config, rng)
    elif variant == VariantType.only_mlp:
        from .ablations import OnlyMlpModel

        return OnlyMlpModel.build(config, rng)
    else:
        raise ConfigurationError(f"Unsupported model variant: {variant}")


def build(config: FilterBankConfig, rng: np.random.Generator | None = None) -> FieldModel:
    """Full filter bank model"""
    return make_variant(config, VariantType.full, rng)
