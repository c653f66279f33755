"""Denoiser-based priors.

A ScoreModel exposes denoise(u, sigma); the score of the sigma-smoothed
density follows from Tweedie's identity, score = (denoise(u) - u) / sigma^2.
Analytic Gaussian and mixture priors have closed-form denoisers and exist so
that every downstream sampler can be checked exactly. NeuralDenoiser loads
small trained MLPs from the BPDM weight format.

BPDM weight file (binary, little-endian):
    magic "BPDM" | version u32 = 1 | dim u32 | layer_count u32 |
    activation u32 (0 = SiLU, 1 = ReLU) |
    per layer: rows u32, cols u32, rows*cols f32 weights row-major,
    rows f32 biases.
Sidecar test vectors (suffix ".vec"):
    count u32 | per vector: dim f32 inputs, 1 f32 sigma, dim f32 outputs.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    BadMagicError,
    DimensionChainError,
    TruncatedFileError,
    UnsupportedVersionError,
)

logger = logging.getLogger(__name__)

ACTIVATION_SILU = 0
ACTIVATION_RELU = 1


class ScoreModel:
    """Abstract denoiser D(u, sigma) with a derived score."""

    dim: int

    def denoise(self, u: np.ndarray, sigma: float) -> np.ndarray:
        raise NotImplementedError

    def score(self, u: np.ndarray, sigma: float) -> np.ndarray:
        """Gradient of log p_sigma at u, via Tweedie's identity."""
        return (self.denoise(u, sigma) - u) / sigma**2


def _check_sigma(sigma):
    if not (sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")


class GaussianPrior(ScoreModel):
    """Isotropic Gaussian N(mean, std^2 I); conjugate verification prior."""

    def __init__(self, mean, std: float):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        if not (std > 0):
            raise ValueError(f"std must be positive, got {std}")
        self.std = float(std)
        self.dim = self.mean.size

    def denoise(self, u, sigma):
        _check_sigma(sigma)
        s2, t2 = self.std**2, sigma**2
        return (s2 * np.asarray(u, dtype=np.float64) + t2 * self.mean) / (s2 + t2)

    def smoothed_logpdf(self, u, sigma):
        """log of N(mean, (std^2 + sigma^2) I) at u, up to the exact constant."""
        v = self.std**2 + sigma**2
        d = np.asarray(u, dtype=np.float64) - self.mean
        return -0.5 * (d @ d) / v - 0.5 * self.dim * np.log(2 * np.pi * v)


class GmmPrior(ScoreModel):
    """Isotropic Gaussian mixture; closed-form denoiser via responsibilities.

    Responsibilities are computed in log space, so far tails cannot
    underflow to an all-zero posterior.
    """

    def __init__(self, weights, means, stds):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.means = [np.atleast_1d(np.asarray(m, dtype=np.float64)) for m in means]
        self.stds = np.asarray(stds, dtype=np.float64)
        if abs(self.weights.sum() - 1.0) > 1e-12 or np.any(self.weights < 0):
            raise ValueError("weights must be a simplex vector")
        if np.any(self.stds <= 0):
            raise ValueError("stds must be positive")
        dims = {m.size for m in self.means}
        if len(dims) != 1:
            raise ValueError("component means must share one dimension")
        if not (len(self.means) == self.weights.size == self.stds.size):
            raise ValueError("weights, means, stds must have equal length")
        self.dim = self.means[0].size

    def _log_responsibilities(self, u, sigma):
        u = np.asarray(u, dtype=np.float64)
        logs = np.empty(len(self.means))
        for i, (w, m, s) in enumerate(zip(self.weights, self.means, self.stds)):
            v = s**2 + sigma**2
            d = u - m
            logs[i] = np.log(w) - 0.5 * (d @ d) / v - 0.5 * self.dim * np.log(v)
        return logs - logsumexp(logs)

    def responsibilities(self, u, sigma):
        _check_sigma(sigma)
        return np.exp(self._log_responsibilities(u, sigma))

    def denoise(self, u, sigma):
        _check_sigma(sigma)
        u = np.asarray(u, dtype=np.float64)
        r = self.responsibilities(u, sigma)
        out = np.zeros_like(u, dtype=np.float64)
        for ri, m, s in zip(r, self.means, self.stds):
            s2, t2 = s**2, sigma**2
            out += ri * (s2 * u + t2 * m) / (s2 + t2)
        return out

    def smoothed_logpdf(self, u, sigma):
        u = np.asarray(u, dtype=np.float64)
        logs = np.empty(len(self.means))
        for i, (w, m, s) in enumerate(zip(self.weights, self.means, self.stds)):
            v = s**2 + sigma**2
            d = u - m
            logs[i] = (
                np.log(w)
                - 0.5 * (d @ d) / v
                - 0.5 * self.dim * np.log(2 * np.pi * v)
            )
        return logsumexp(logs)


def gaussian_denoise(u, sigma, prior: GaussianPrior):
    return prior.denoise(u, sigma)


def gmm_denoise(u, sigma, prior: GmmPrior):
    return prior.denoise(u, sigma)


_MAGIC = b"BPDM"
_VERSION = 1


class NeuralDenoiser(ScoreModel):
    """Small MLP denoiser conditioned on log(sigma)/4 as an extra channel.

    sigma_range, when set, clamps out-of-range noise levels at inference
    (annealing schedules may slightly exceed the trained range).
    """

    def __init__(self, layers, activation, sigma_range=None):
        self.layers = [
            (np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64))
            for w, b in layers
        ]
        if activation not in (ACTIVATION_SILU, ACTIVATION_RELU):
            raise ValueError(f"unknown activation code {activation}")
        self.activation = activation
        self.sigma_range = sigma_range
        self._validate()
        self.dim = self.layers[-1][0].shape[0]

    def _validate(self):
        if not self.layers:
            raise DimensionChainError("network has no layers")
        dim = self.layers[-1][0].shape[0]
        expect = dim + 1
        for i, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or b.size != w.shape[0]:
                raise DimensionChainError(f"layer {i}: malformed weight/bias")
            if w.shape[1] != expect:
                raise DimensionChainError(
                    f"layer {i}: expected input width {expect}, got {w.shape[1]}"
                )
            expect = w.shape[0]
        if expect != dim:
            raise DimensionChainError(
                f"final layer outputs {expect}, expected {dim}"
            )

    def _act(self, x):
        if self.activation == ACTIVATION_RELU:
            return np.maximum(x, 0.0)
        return x / (1.0 + np.exp(-x))  # SiLU

    def denoise(self, u, sigma):
        _check_sigma(sigma)
        u = np.asarray(u, dtype=np.float64)
        if u.size != self.dim:
            raise ValueError(f"input dim {u.size} != model dim {self.dim}")
        if self.sigma_range is not None:
            lo, hi = self.sigma_range
            if sigma < lo or sigma > hi:
                logger.warning(
                    "sigma %.3g outside trained range [%.3g, %.3g]; clamping",
                    sigma, lo, hi,
                )
                sigma = min(max(sigma, lo), hi)
        h = np.append(u, np.log(sigma) / 4.0)
        for i, (w, b) in enumerate(self.layers):
            h = w @ h + b
            if i != len(self.layers) - 1:
                h = self._act(h)
        return h


def net_denoise(u, sigma, net: NeuralDenoiser):
    return net.denoise(u, sigma)


def _read(f, fmt):
    size = struct.calcsize(fmt)
    buf = f.read(size)
    if len(buf) != size:
        raise TruncatedFileError(
            f"expected {size} bytes for {fmt!r}, got {len(buf)}"
        )
    return struct.unpack(fmt, buf)


def _read_f32(f, count, what):
    buf = f.read(4 * count)
    if len(buf) != 4 * count:
        raise TruncatedFileError(
            f"truncated while reading {what}: wanted {4 * count} bytes, "
            f"got {len(buf)}"
        )
    return np.frombuffer(buf, dtype="<f4", count=count)


def load_score_net(path, sigma_range=None) -> NeuralDenoiser:
    """Load a NeuralDenoiser from a BPDM weight file, validating invariants."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        (version,) = _read(f, "<I")
        if version != _VERSION:
            raise UnsupportedVersionError(
                f"{path}: version {version}, only {_VERSION} supported"
            )
        dim, layer_count, activation = _read(f, "<III")
        if layer_count == 0:
            raise DimensionChainError(f"{path}: zero layers")
        layers = []
        for i in range(layer_count):
            rows, cols = _read(f, "<II")
            w = _read_f32(f, rows * cols, f"layer {i} weights").reshape(rows, cols)
            b = _read_f32(f, rows, f"layer {i} biases")
            layers.append((w, b))
        trailing = f.read(1)
        if trailing:
            raise TruncatedFileError(f"{path}: trailing bytes after last layer")
    net = NeuralDenoiser(layers, activation, sigma_range=sigma_range)
    if net.dim != dim:
        raise DimensionChainError(
            f"{path}: header dim {dim} != layer-derived dim {net.dim}"
        )
    return net


def save_score_net(net: NeuralDenoiser, path) -> None:
    """Write a BPDM weight file (weights stored as f32)."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIII", _VERSION, net.dim, len(net.layers),
                            net.activation))
        for w, b in net.layers:
            f.write(struct.pack("<II", w.shape[0], w.shape[1]))
            f.write(w.astype("<f4").tobytes())
            f.write(b.astype("<f4").tobytes())


def load_test_vectors(path):
    """Read a .vec sidecar: list of (input, sigma, expected_output)."""
    out = []
    with open(path, "rb") as f:
        (count,) = _read(f, "<I")
        # dim is implied by the paired BPDM file; infer it from the payload
        # size, each record being (2*dim + 1) f32s.
        payload = np.frombuffer(f.read(), dtype="<f4")
    if count == 0:
        return out
    if payload.size % count != 0:
        raise TruncatedFileError(f"{path}: payload not divisible into {count} records")
    rec = payload.size // count
    if rec % 2 != 1:
        raise TruncatedFileError(f"{path}: record length {rec} is not 2*dim+1")
    dim = (rec - 1) // 2
    payload = payload.reshape(count, rec)
    for row in payload:
        out.append((row[:dim].copy(), float(row[dim]), row[dim + 1:].copy()))
    return out


def save_test_vectors(vectors, path) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<I", len(vectors)))
        for u, sigma, expected in vectors:
            f.write(np.asarray(u, dtype="<f4").tobytes())
            f.write(struct.pack("<f", float(sigma)))
            f.write(np.asarray(expected, dtype="<f4").tobytes())
