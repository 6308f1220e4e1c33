"""Desk-scale fits (run with ``pytest -m slow``)"""

import time

import numpy as np
import pytest

from src.config.run_config import parse_config
from src.pipeline import experiments

DESK_IMAGE = """\
[run]
task = image
steps = 3000
log_every = 500
seed = 0
deterministic = true

[model]
n_levels = 6
width = 64
alpha = 100

[grid]
n_min = 16
c_g = 1.5
log2_hashmap_size = 14

[fourier]
sigma_min = 5
c_f = 2
"""

DESK_SDF = """\
[run]
task = sdf
steps = 2000
batch_size = 8192
log_every = 500
deterministic = true

[sdf]
shape = sphere
radius = 0.5
"""


def _desk_image(size: int = 256) -> np.ndarray:
    """Smooth shading with a few sharp edges and some fine stripes"""
    ys, xs = np.mgrid[0:size, 0:size] / (size - 1)
    base = 0.5 + 0.25 * np.sin(2 * np.pi * (1.5 * xs + 0.5 * ys))
    disk = ((xs - 0.35) ** 2 + (ys - 0.6) ** 2 < 0.04).astype(float)
    stripes = 0.1 * np.sin(2 * np.pi * 24 * xs) * (ys > 0.7)
    red = np.clip(base + 0.3 * disk + stripes, 0, 1)
    green = np.clip(0.8 * base - 0.2 * disk + 0.5 * xs * ys, 0, 1)
    blue = np.clip(1.0 - base + 0.2 * (xs > 0.8), 0, 1)
    return np.stack([red, green, blue], axis=-1)


@pytest.mark.slow
class TestDeskScale:
    def test_image_fit(self, tmp_path):
        config = parse_config(DESK_IMAGE).with_overrides(output_dir=str(tmp_path))
        started = time.perf_counter()
        result = experiments.fit(config, image=_desk_image())
        assert time.perf_counter() - started <= 600.0

        psnrs = [row.metric for row in result.metrics]
        assert len(psnrs) == 6
        assert all(b >= a for a, b in zip(psnrs, psnrs[1:]))
        assert psnrs[-1] >= 30.0

    def test_ablation_ordering(self, tmp_path):
        config = parse_config(DESK_IMAGE).with_overrides(output_dir=str(tmp_path))
        rows = {row.variant: row for row in experiments.ablate(config, image=_desk_image())}

        full = rows.pop("full")
        for variant, row in rows.items():
            assert full.metric >= row.metric + 0.5, variant

    def test_sdf_sphere(self, tmp_path):
        config = parse_config(DESK_SDF).with_overrides(output_dir=str(tmp_path))
        started = time.perf_counter()
        fitted = experiments.fit(config)
        report = experiments.evaluate(fitted.checkpoint_path)
        assert time.perf_counter() - started <= 600.0
        assert report.surface_error < 5e-3
        assert report.iou >= 0.99
