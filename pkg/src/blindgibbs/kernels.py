"""Synthetic problem generation: test images and blur kernels."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .grids import Grid


def gaussian_kernel(size: int, std: float) -> Grid:
    """Isotropic Gaussian truncated to a size x size grid, sum 1."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if not (std > 0):
        raise ValueError("std must be positive")
    ax = np.arange(size) - size // 2
    g = np.exp(-0.5 * (ax / std) ** 2)
    k = np.outer(g, g)
    return Grid(k / k.sum())


def motion_kernel(size: int, rng: np.random.Generator, smooth_std=0.5) -> Grid:
    """Seeded random-walk trajectory rasterized and smoothed, sum 1.

    Step std is 1 pixel and the walk length is ~3x the kernel width, which
    yields kernels qualitatively similar to camera-shake traces.
    """
    if size < 3:
        raise ValueError("size must be >= 3")
    steps = 3 * size
    pos = np.cumsum(rng.normal(0.0, 1.0, size=(steps, 2)), axis=0)
    pos -= pos.mean(axis=0)
    k = np.zeros((size, size))
    c = size // 2
    for py, px in pos:
        iy, ix = int(round(py)) + c, int(round(px)) + c
        if 0 <= iy < size and 0 <= ix < size:
            k[iy, ix] += 1.0
    if k.sum() == 0:
        k[c, c] = 1.0
    k = gaussian_filter(k, smooth_std, mode="constant")
    return Grid(k / k.sum())


def dirac_kernel(size: int) -> Grid:
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return Grid(k)


def blobs_image(size: int, rng: np.random.Generator, n_blobs: int = 8) -> Grid:
    """Sum of random Gaussian bumps, rescaled into [0.05, 0.95].

    Smooth synthetic scenes keep desk-scale deblurring well conditioned
    while still carrying enough structure for PSNR/SSIM to move.
    """
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((size, size))
    for _ in range(n_blobs):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        s = rng.uniform(0.05, 0.2)
        amp = rng.uniform(0.3, 1.0)
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s**2))
    lo, hi = img.min(), img.max()
    img = 0.05 + 0.9 * (img - lo) / (hi - lo)
    return Grid(img)


def checker_image(size: int, period: int = 8) -> Grid:
    yy, xx = np.mgrid[0:size, 0:size]
    img = (((yy // period) + (xx // period)) % 2).astype(np.float64)
    return Grid(0.1 + 0.8 * img)
