"""Shared fixtures: tiny double-precision models and small synthetic images"""

from __future__ import annotations

import numpy as np
import pytest

from src.core.field_model import FilterBankConfig, Precision, make_variant


@pytest.fixture
def tiny_config() -> FilterBankConfig:
    """n=2, L=2, width=8, F=2, T=64 in float64"""
    return FilterBankConfig(
        n_input=2,
        d_out=3,
        n_levels=2,
        width=8,
        alpha=10.0,
        n_min=8,
        c_g=1.5,
        log2_hashmap_size=6,
        n_features=2,
        sigma_min=1.0,
        c_f=2.0,
        seed=0,
        precision=Precision.float64,
    )


@pytest.fixture
def tiny_sdf_config() -> FilterBankConfig:
    return FilterBankConfig(
        n_input=3,
        d_out=1,
        n_levels=2,
        width=8,
        alpha=10.0,
        n_min=4,
        c_g=1.5,
        log2_hashmap_size=8,
        sigma_min=1.0,
        c_f=1.2,
        seed=0,
        precision=Precision.float64,
    )


@pytest.fixture
def tiny_model(tiny_config):
    return make_variant(tiny_config, "full")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def gradient_image() -> np.ndarray:
    """16×16 RGB ramp"""
    ys, xs = np.mgrid[0:16, 0:16] / 15.0
    return np.stack([xs, ys, 0.5 * (xs + ys)], axis=-1)


@pytest.fixture
def ppm_path(tmp_path, gradient_image):
    from src.repository.image_io import save_image

    return save_image(tmp_path / "ramp.ppm", gradient_image)
