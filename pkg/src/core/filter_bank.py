"""Neural Fourier filter bank

sine MLP의 각 층에 같은 인덱스 레벨의 Fourier grid feature를 더하고,
층마다 linear head로 출력을 뽑아 합산합니다.

    f_1 = sin(α·W_1 x + b_1)            g_1 = f_1 + γ_1(v_1)
    f_i = sin(α·W_i g_{i-1} + b_i)      g_i = f_i + γ_i(v_i)
    o_i = W_i^o g_i + b_i^o             F(x) = Σ_i o_i
"""

from __future__ import annotations

import numpy as np

from .field_model import (
    FieldModel,
    FieldOutput,
    FilterBankConfig,
    VariantType,
    build_grid_levels,
    head_init,
    sine_layer_init,
)
from .fourier_grid import FourierLayer, fourier_encode, init_fourier
from .hash_grid import GridLevel, interpolate
from .params import ModelParams
from .tape import Tape


def parameter_count(config: FilterBankConfig) -> int:
    """Closed-form size of the full model"""
    total = 0
    for level in build_grid_levels(config):
        fan_in = config.n_input if level.config.level_index == 0 else config.width
        total += level.table_rows * config.n_features
        total += config.width * config.n_features
        total += fan_in * config.width + config.width
        total += config.d_out * config.width + config.d_out
    return total


class FilterBankModel(FieldModel):
    """Full model: one grid level, one Fourier layer, one sine layer and one head per level"""

    variant = VariantType.full

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
    def build(cls, config: FilterBankConfig, rng: np.random.Generator) -> FilterBankModel:
        dtype = config.dtype
        levels = build_grid_levels(config)
        fourier: list[FourierLayer] = []
        arrays: dict[str, np.ndarray] = {}

        for i, level in enumerate(levels):
            arrays[level.table_name] = level.init_table(rng, dtype)

            layer, matrix = init_fourier(
                i, config.width, config.n_features, config.sigma_min, config.c_f, rng, dtype=dtype
            )
            fourier.append(layer)
            arrays[layer.matrix_name] = matrix

            fan_in = config.n_input if i == 0 else config.width
            weight, bias = sine_layer_init(rng, fan_in, config.width, config.alpha_for(i), first=i == 0)
            arrays[f"mlp.{i}.weight"] = weight
            arrays[f"mlp.{i}.bias"] = bias

            head_w, head_b = head_init(rng, config.width, config.d_out)
            arrays[f"head.{i}.weight"] = head_w
            arrays[f"head.{i}.bias"] = head_b

        return cls(config, ModelParams.pack(arrays, dtype=dtype), levels, fourier)

    def record(self, tape: Tape, x: np.ndarray) -> FieldOutput:
        g = tape.constant(x)
        outputs = []
        hidden = []
        for i, (level, layer) in enumerate(zip(self.levels, self.fourier)):
            z = tape.affine(g, f"mlp.{i}.weight", f"mlp.{i}.bias", scale=self.config.alpha_for(i))
            f = tape.sine_act(z, 1.0)
            hidden.append(f)
            v = interpolate(tape, x, level)
            g = tape.add(f, fourier_encode(tape, v, layer))
            outputs.append(tape.affine(g, f"head.{i}.weight", f"head.{i}.bias"))
        return FieldOutput(value=tape.sum(outputs), levels=outputs, hidden=hidden)
