"""Ablation variants

filter bank 구성 요소를 하나씩 제거한 비교용 모델입니다.

- only_grid: grid feature를 선형으로 width까지 올린 뒤(sin, B 없음) 이어 붙여 plain head MLP로 디코딩
- grid_ff:   grid feature를 Fourier 인코딩한 뒤 이어 붙여 plain head MLP로 디코딩 (층별 주입·head 합산 없음)
- only_mlp:  grid 없이 sine MLP만, 전체 모델과 비슷한 파라미터 수가 되도록 width를 늘림
"""

from __future__ import annotations

import math

import numpy as np

from .field_model import (
    FieldModel,
    FieldOutput,
    FilterBankConfig,
    VariantType,
    build_grid_levels,
    head_init,
    sine_layer_init,
    uniform,
)
from .filter_bank import parameter_count
from .fourier_grid import FourierLayer, fourier_encode, init_fourier
from .hash_grid import GridLevel, interpolate
from .params import ModelParams
from .tape import Tape, Var


def _decoder_arrays(rng: np.random.Generator, fan_in: int, width: int, d_out: int) -> dict[str, np.ndarray]:
    """Plain head MLP: one unit-scale sine layer and a linear output"""
    bound = math.sqrt(6.0 / fan_in)
    out_w, out_b = head_init(rng, width, d_out)
    return {
        "decoder.hidden.weight": uniform(rng, bound, (width, fan_in)),
        "decoder.hidden.bias": uniform(rng, 1.0 / math.sqrt(fan_in), (width,)),
        "decoder.out.weight": out_w,
        "decoder.out.bias": out_b,
    }


def _decode(tape: Tape, features: Var) -> tuple[Var, Var]:
    hidden = tape.sine_act(tape.affine(features, "decoder.hidden.weight", "decoder.hidden.bias"), 1.0)
    return tape.affine(hidden, "decoder.out.weight", "decoder.out.bias"), hidden


class OnlyGridModel(FieldModel):
    """Grid features only: linear lifts P_i instead of Fourier layers, no x-fed trunk"""

    variant = VariantType.only_grid

    def __init__(self, config: FilterBankConfig, params: ModelParams, levels: list[GridLevel]):
        super().__init__(config, params)
        self.levels = levels

    @classmethod
    def build(cls, config: FilterBankConfig, rng: np.random.Generator) -> OnlyGridModel:
        levels = build_grid_levels(config)
        arrays: dict[str, np.ndarray] = {}
        for i, level in enumerate(levels):
            arrays[level.table_name] = level.init_table(rng, config.dtype)
            arrays[f"lift.{i}.weight"] = np.eye(config.width, config.n_features)
        arrays.update(_decoder_arrays(rng, config.n_levels * config.width, config.width, config.d_out))
        return cls(config, ModelParams.pack(arrays, dtype=config.dtype), levels)

    def record(self, tape: Tape, x: np.ndarray) -> FieldOutput:
        lifted = [
            tape.affine(interpolate(tape, x, level), f"lift.{i}.weight")
            for i, level in enumerate(self.levels)
        ]
        value, hidden = _decode(tape, tape.concat(lifted))
        return FieldOutput(value=value, levels=[value], hidden=[hidden])


class GridFourierModel(FieldModel):
    """Grid + Fourier features, decoded jointly instead of composed layer by layer"""

    variant = VariantType.grid_ff

    def __init__(
        self,
        config: FilterBankConfig,
        params: ModelParams,
        levels: list[GridLevel],
        fourier: list[FourierLayer],
    ):
        super().__init__(config, params)
        self.levels = levels
        self.fourier = fourier

    @classmethod
    def build(cls, config: FilterBankConfig, rng: np.random.Generator) -> GridFourierModel:
        levels = build_grid_levels(config)
        fourier: list[FourierLayer] = []
        arrays: dict[str, np.ndarray] = {}
        for i, level in enumerate(levels):
            arrays[level.table_name] = level.init_table(rng, config.dtype)
            layer, matrix = init_fourier(
                i, config.width, config.n_features, config.sigma_min, config.c_f, rng, dtype=config.dtype
            )
            fourier.append(layer)
            arrays[layer.matrix_name] = matrix
        arrays.update(_decoder_arrays(rng, config.n_levels * config.width, config.width, config.d_out))
        return cls(config, ModelParams.pack(arrays, dtype=config.dtype), levels, fourier)

    def record(self, tape: Tape, x: np.ndarray) -> FieldOutput:
        encoded = [
            fourier_encode(tape, interpolate(tape, x, level), layer)
            for level, layer in zip(self.levels, self.fourier)
        ]
        value, hidden = _decode(tape, tape.concat(encoded))
        return FieldOutput(value=value, levels=[value], hidden=[hidden])


def mlp_parameter_count(n_input: int, width: int, n_layers: int, d_out: int) -> int:
    return n_input * width + width + (n_layers - 1) * (width * width + width) + d_out * width + d_out


def matched_width(config: FilterBankConfig, target: int | None = None) -> int:
    """Width whose sine-MLP parameter count is closest to ``target`` (default: the full model)"""
    target = parameter_count(config) if target is None else target
    width = 1
    while mlp_parameter_count(config.n_input, width, config.n_levels, config.d_out) < target:
        width += 1
    if width == 1:
        return width
    above = mlp_parameter_count(config.n_input, width, config.n_levels, config.d_out)
    below = mlp_parameter_count(config.n_input, width - 1, config.n_levels, config.d_out)
    return width if above - target <= target - below else width - 1


class OnlyMlpModel(FieldModel):
    """Sine MLP without grids, widened to roughly the full model's parameter budget"""

    variant = VariantType.only_mlp

    def __init__(self, config: FilterBankConfig, params: ModelParams, width: int):
        super().__init__(config, params)
        self.width = width

    @classmethod
    def build(cls, config: FilterBankConfig, rng: np.random.Generator) -> OnlyMlpModel:
        width = matched_width(config)
        arrays: dict[str, np.ndarray] = {}
        for i in range(config.n_levels):
            fan_in = config.n_input if i == 0 else width
            weight, bias = sine_layer_init(rng, fan_in, width, config.alpha_for(i), first=i == 0)
            arrays[f"mlp.{i}.weight"] = weight
            arrays[f"mlp.{i}.bias"] = bias
        head_w, head_b = head_init(rng, width, config.d_out)
        arrays["head.weight"] = head_w
        arrays["head.bias"] = head_b
        return cls(config, ModelParams.pack(arrays, dtype=config.dtype), width)

    def record(self, tape: Tape, x: np.ndarray) -> FieldOutput:
        g = tape.constant(x)
        hidden = []
        for i in range(self.config.n_levels):
            z = tape.affine(g, f"mlp.{i}.weight", f"mlp.{i}.bias", scale=self.config.alpha_for(i))
            g = tape.sine_act(z, 1.0)
            hidden.append(g)
        value = tape.affine(g, "head.weight", "head.bias")
        return FieldOutput(value=value, levels=[value], hidden=hidden)
