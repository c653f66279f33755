"""Image-quality and kernel-error metrics, plus the TV test statistic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .grids import Grid


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    kernel_mse: float
    kernel_mse_aligned: float

    def csv_row(self) -> str:
        return f"{self.psnr_db:.6g},{self.ssim:.8g},{self.kernel_mse:.8g},{self.kernel_mse_aligned:.8g}"


def _check_same_shape(x: Grid, ref: Grid):
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")


def psnr(x: Grid, ref: Grid, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE) in dB; +inf for identical inputs."""
    _check_same_shape(x, ref)
    mse = np.mean((x.values - ref.values) ** 2)
    if mse == 0.0:
        return np.inf
    return 10.0 * np.log10(peak**2 / mse)


def _gaussian_window(size=11, std=1.5):
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-0.5 * (ax / std) ** 2)
    w = np.outer(g, g)
    return w / w.sum()


def ssim(x: Grid, ref: Grid, k1=0.01, k2=0.03, dynamic_range=1.0) -> float:
    """Mean local SSIM over valid 11x11 Gaussian windows (std 1.5).

    Standard reference constants; the dynamic range defaults to 1.0 for
    images in [0, 1].
    """
    _check_same_shape(x, ref)
    if x.height < 11 or x.width < 11:
        raise ValueError("ssim requires grids of at least 11x11")
    w = _gaussian_window()
    a, b = x.values, ref.values
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2

    def filt(img):
        return signal.correlate2d(img, w, mode="valid")

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def kernel_error(theta_hat: Grid, theta_true: Grid) -> tuple[float, float]:
    """(plain MSE, MSE minimized over all circular shifts).

    Circular blind deconvolution is identifiable only up to a shift of the
    kernel, so the aligned error is the meaningful one.
    """
    _check_same_shape(theta_hat, theta_true)
    a, b = theta_hat.values, theta_true.values
    plain = float(np.mean((a - b) ** 2))
    # MSE over all shifts via cross-correlation: ||a||^2 + ||b||^2 - 2<a, shift(b)>
    cross = np.fft.irfft2(
        np.fft.rfft2(a) * np.conj(np.fft.rfft2(b)), s=a.shape
    )
    n = a.size
    mses = (np.sum(a * a) + np.sum(b * b) - 2 * cross) / n
    # clamp FFT roundoff and enforce aligned <= plain (zero shift is a
    # member of the minimization set)
    aligned = min(max(float(np.min(mses)), 0.0), plain)
    return plain, aligned


def tv_distance(counts, probs) -> float:
    """Half the L1 distance between a sample histogram and oracle bin masses."""
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if counts.shape != probs.shape:
        raise ValueError(f"bin mismatch: {counts.shape} vs {probs.shape}")
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty histogram")
    return float(0.5 * np.abs(counts / total - probs / probs.sum()).sum())
