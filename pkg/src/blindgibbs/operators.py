"""Linear measurement operators for y = A(theta) x + e.

Everything here is specialized to 2-D circular (periodic) convolution,
which the FFT diagonalizes, plus a dense fallback for tiny test problems.
Operators act on flattened row-major vectors; convolution kernels are
centered at their geometric center (floor(h/2), floor(w/2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian measurement noise with standard deviation sigma_y."""

    sigma_y: float

    def __post_init__(self):
        if not (self.sigma_y > 0):
            raise ValueError(f"sigma_y must be positive, got {self.sigma_y}")


class LinearOperator:
    """Abstract forward map with an adjoint.

    apply() maps R^input_dim -> R^output_dim; adjoint() maps back.
    Implementations must satisfy <apply(v), w> = <v, adjoint(w)>.
    """

    input_dim: int
    output_dim: int

    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def normal_apply(self, v: np.ndarray) -> np.ndarray:
        """A^T A v; used by iterative solvers."""
        return self.adjoint(self.apply(v))


def _check_kernel_fits(image_shape, kernel_shape):
    if kernel_shape[0] > image_shape[0] or kernel_shape[1] > image_shape[1]:
        raise ValueError(
            f"kernel shape {kernel_shape} exceeds image shape {image_shape}"
        )


def embed_kernel(kernel: np.ndarray, image_shape) -> np.ndarray:
    """Pad a kernel to image size with its center moved to index (0, 0).

    The resulting array e satisfies e[(a-ch) % H, (b-cw) % W] = k[a, b],
    so FFT(image) * FFT(e) implements centered circular convolution.
    """
    _check_kernel_fits(image_shape, kernel.shape)
    kh, kw = kernel.shape
    padded = np.zeros(image_shape)
    padded[:kh, :kw] = kernel
    return np.roll(padded, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def extract_kernel(field: np.ndarray, kernel_shape) -> np.ndarray:
    """Adjoint of embed_kernel: read kernel entries back out of a field."""
    kh, kw = kernel_shape
    return np.roll(field, (kh // 2, kw // 2), axis=(0, 1))[:kh, :kw].copy()


def conv2d_circular(image: Grid, kernel: Grid) -> Grid:
    """Centered circular 2-D convolution via frequency-domain product."""
    e = embed_kernel(kernel.values, image.shape)
    out = np.fft.irfft2(
        np.fft.rfft2(image.values) * np.fft.rfft2(e), s=image.shape
    )
    return Grid(out)


def conv2d_adjoint(residual: Grid, kernel: Grid) -> Grid:
    """Adjoint of conv2d_circular(., kernel): circular correlation."""
    e = embed_kernel(kernel.values, residual.shape)
    out = np.fft.irfft2(
        np.fft.rfft2(residual.values) * np.conj(np.fft.rfft2(e)),
        s=residual.shape,
    )
    return Grid(out)


class ConvolutionOperator(LinearOperator):
    """Circular convolution with a fixed kernel; A(theta) for deblurring.

    Precomputes the kernel's frequency response, which also makes the
    shifted normal equations (alpha A^T A + beta I) z = r solvable exactly
    per frequency.
    """

    def __init__(self, kernel: Grid, image_shape):
        _check_kernel_fits(image_shape, kernel.shape)
        self.image_shape = tuple(image_shape)
        self.kernel_shape = kernel.shape
        self._khat = np.fft.rfft2(embed_kernel(kernel.values, image_shape))
        self.input_dim = image_shape[0] * image_shape[1]
        self.output_dim = self.input_dim

    def apply(self, v):
        field = v.reshape(self.image_shape)
        out = np.fft.irfft2(np.fft.rfft2(field) * self._khat, s=self.image_shape)
        return out.reshape(-1)

    def adjoint(self, w):
        field = w.reshape(self.image_shape)
        out = np.fft.irfft2(
            np.fft.rfft2(field) * np.conj(self._khat), s=self.image_shape
        )
        return out.reshape(-1)

    def solve_shifted_normal(self, rhs, alpha, beta):
        """Solve (alpha A^T A + beta I) z = rhs exactly in frequency domain."""
        field = rhs.reshape(self.image_shape)
        denom = alpha * np.abs(self._khat) ** 2 + beta
        out = np.fft.irfft2(np.fft.rfft2(field) / denom, s=self.image_shape)
        return out.reshape(-1)


class ThetaOperator(LinearOperator):
    """B(x): the measurement as a linear map of the kernel, image fixed.

    By commutativity of convolution, B(x) theta = A(theta) x, so B(x) v is
    just circular convolution of the fixed image with v embedded as a
    kernel. The adjoint is correlation with the image followed by reading
    the kernel window back out.
    """

    def __init__(self, image: Grid, kernel_shape):
        _check_kernel_fits(image.shape, kernel_shape)
        self.image_shape = image.shape
        self.kernel_shape = tuple(kernel_shape)
        self._xhat = np.fft.rfft2(image.values)
        self.input_dim = kernel_shape[0] * kernel_shape[1]
        self.output_dim = image.shape[0] * image.shape[1]

    def apply(self, v):
        e = embed_kernel(v.reshape(self.kernel_shape), self.image_shape)
        out = np.fft.irfft2(np.fft.rfft2(e) * self._xhat, s=self.image_shape)
        return out.reshape(-1)

    def adjoint(self, w):
        field = np.fft.irfft2(
            np.fft.rfft2(w.reshape(self.image_shape)) * np.conj(self._xhat),
            s=self.image_shape,
        )
        return extract_kernel(field, self.kernel_shape).reshape(-1)

    def solve_shifted_normal(self, rhs, alpha, beta):
        # Only exact when the kernel grid fills the image grid, in which
        # case embedding is a circular shift and B is itself circulant.
        if self.kernel_shape != self.image_shape:
            raise ValueError(
                "fourier-exact solve requires kernel grid == image grid, "
                f"got {self.kernel_shape} vs {self.image_shape}"
            )
        e = embed_kernel(rhs.reshape(self.kernel_shape), self.image_shape)
        denom = alpha * np.abs(self._xhat) ** 2 + beta
        out = np.fft.irfft2(np.fft.rfft2(e) / denom, s=self.image_shape)
        return extract_kernel(out, self.kernel_shape).reshape(-1)


def as_theta_operator(image: Grid, kernel_shape) -> ThetaOperator:
    """Operator B(x) with B(x) theta = A(theta) x (kernel as the unknown)."""
    return ThetaOperator(image, kernel_shape)


class DenseOperator(LinearOperator):
    """Explicit-matrix operator for tiny conjugate test problems."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or not np.all(np.isfinite(self.matrix)):
            raise ValueError("matrix must be a finite 2-D array")
        self.output_dim, self.input_dim = self.matrix.shape

    def apply(self, v):
        return self.matrix @ v

    def adjoint(self, w):
        return self.matrix.T @ w


def dense_operator(matrix) -> DenseOperator:
    return DenseOperator(matrix)


class BlindForwardModel:
    """Bilinear forward model: operators in x for fixed theta and vice versa."""

    def image_operator(self, theta: Grid) -> LinearOperator:
        raise NotImplementedError

    def theta_operator(self, x: Grid) -> LinearOperator:
        raise NotImplementedError


class ConvolutionBlindModel(BlindForwardModel):
    """Blind deconvolution: A(theta) x = theta (*) x on a periodic grid."""

    def __init__(self, image_shape, kernel_shape):
        _check_kernel_fits(image_shape, kernel_shape)
        self.image_shape = tuple(image_shape)
        self.kernel_shape = tuple(kernel_shape)

    def image_operator(self, theta: Grid) -> ConvolutionOperator:
        return ConvolutionOperator(theta, self.image_shape)

    def theta_operator(self, x: Grid) -> ThetaOperator:
        return ThetaOperator(x, self.kernel_shape)


class BilinearBlindModel(BlindForwardModel):
    """A(theta) = sum_i theta_i M_i for fixed matrices M_i.

    Used by the conjugate verification problems, where both blocks must be
    exactly linear-Gaussian.
    """

    def __init__(self, matrices):
        self.matrices = [np.asarray(m, dtype=np.float64) for m in matrices]
        shapes = {m.shape for m in self.matrices}
        if len(shapes) != 1:
            raise ValueError("all matrices must share one shape")

    def image_operator(self, theta: Grid) -> DenseOperator:
        t = theta.flatten()
        a = sum(ti * mi for ti, mi in zip(t, self.matrices))
        return DenseOperator(a)

    def theta_operator(self, x: Grid) -> DenseOperator:
        xf = x.flatten()
        cols = np.column_stack([m @ xf for m in self.matrices])
        return DenseOperator(cols)
