"""Synthetic training datasets: blur kernels and blob images, flattened."""

from __future__ import annotations

import numpy as np

from .spec import TrainSpec


def _gaussian_kernel(size: int, std: float) -> np.ndarray:
    c = (size - 1) / 2.0
    g = np.arange(size) - c
    k = np.exp(-0.5 * (g[:, None] ** 2 + g[None, :] ** 2) / std**2)
    return k / k.sum()


def _smooth(field: np.ndarray, std: float) -> np.ndarray:
    """Separable Gaussian blur with reflecting edges (tiny grids only)."""
    radius = max(1, int(3 * std))
    g = np.exp(-0.5 * (np.arange(-radius, radius + 1) / std) ** 2)
    g /= g.sum()
    padded = np.pad(field, radius, mode="reflect")
    rows = np.apply_along_axis(np.convolve, 1, padded, g, mode="valid")
    return np.apply_along_axis(np.convolve, 0, rows, g, mode="valid")


def gaussian_kernels(size: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Centered isotropic Gaussian kernels with random width."""
    stds = rng.uniform(0.4, max(0.6, size / 4.0), size=n)
    return np.stack([_gaussian_kernel(size, s).ravel() for s in stds])


def motion_kernels(size: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Short line segments through the center, lightly smoothed."""
    if size < 3:
        raise ValueError(f"motion kernels need size >= 3, got {size}")
    c = (size - 1) / 2.0
    out = np.empty((n, size * size))
    for i in range(n):
        angle = rng.uniform(0, np.pi)
        length = rng.uniform(1.0, size / 2.0)
        k = np.zeros((size, size))
        for t in np.linspace(-length, length, 8 * size):
            r = int(round(c + t * np.sin(angle)))
            col = int(round(c + t * np.cos(angle)))
            if 0 <= r < size and 0 <= col < size:
                k[r, col] = 1.0
        k = _smooth(k, 0.5)
        out[i] = (k / k.sum()).ravel()
    return out


def blobs_images(size: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sums of random Gaussian bumps, clipped to [0, 1]."""
    yy, xx = np.mgrid[0:size, 0:size]
    out = np.empty((n, size * size))
    for i in range(n):
        img = np.zeros((size, size))
        for _ in range(rng.integers(3, 9)):
            cy, cx = rng.uniform(0, size, size=2)
            amp = rng.uniform(0.3, 1.0)
            width = rng.uniform(size / 12.0, size / 4.0)
            img += amp * np.exp(
                -0.5 * ((yy - cy) ** 2 + (xx - cx) ** 2) / width**2
            )
        out[i] = np.clip(img, 0.0, 1.0).ravel()
    return out


_BUILDERS = {
    "synthetic-kernels-gaussian": gaussian_kernels,
    "synthetic-kernels-motion": motion_kernels,
    "synthetic-images-blobs": blobs_images,
}


def make_dataset(spec: TrainSpec, n: int = 10_000) -> np.ndarray:
    """(n, grid_size^2) float64 samples for the spec's dataset name."""
    rng = np.random.default_rng(spec.seed)
    return _BUILDERS[spec.dataset](spec.grid_size, n, rng)
