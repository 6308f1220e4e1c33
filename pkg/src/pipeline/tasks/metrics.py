"""Image reconstruction metrics (PSNR, SSIM)"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import convolve2d

from src.core.errors import InputError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def mse(pred: np.ndarray, gt: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise InputError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    return float(np.mean((pred - gt) ** 2))


def psnr(pred: np.ndarray, gt: np.ndarray, peak: float = 1.0) -> float:
    """``10·log10(peak² / MSE)``; identical inputs give ``math.inf``"""
    error = mse(pred, gt)
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / error)


def luminance(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[2] == 3:
        return image @ LUMA_WEIGHTS
    if image.ndim == 3 and image.shape[2] == 1:
        return image[..., 0]
    raise InputError(f"expected a grayscale or RGB image, got shape {image.shape}")


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def ssim(pred: np.ndarray, gt: np.ndarray, peak: float = 1.0) -> float:
    """Mean SSIM over valid 11×11 Gaussian windows of the luminance channel"""
    if np.shape(pred) != np.shape(gt):
        raise InputError(f"shape mismatch: {np.shape(pred)} vs {np.shape(gt)}")
    x = luminance(pred)
    y = luminance(gt)
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise InputError(f"image {x.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")

    window = gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def _filter(img: np.ndarray) -> np.ndarray:
        return convolve2d(img, window, mode="valid")

    mu_x = _filter(x)
    mu_y = _filter(y)
    var_x = _filter(x * x) - mu_x * mu_x
    var_y = _filter(y * y) - mu_y * mu_y
    cov = _filter(x * y) - mu_x * mu_y

    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(numerator / denominator))
