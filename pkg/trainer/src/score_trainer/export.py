"""BPDM weight export plus a .vec sidecar of self-evaluated test vectors.

The binary layout is the consumer contract (little-endian throughout):

  BPDM:  magic "BPDM" | u32 version=1 | u32 dim | u32 layer_count |
         u32 activation (0=silu, 1=relu) | per layer:
         u32 rows | u32 cols | f32 weights row-major | f32 biases
  .vec:  u32 count | per record: f32 input[dim] | f32 sigma | f32 output[dim]

Every expected output in the sidecar is produced by forward() below, so a
consumer that reproduces that arithmetic can check itself against the file.
"""

from __future__ import annotations

import struct

import numpy as np

from .train import TrainedDenoiser

MAGIC = b"BPDM"
VERSION = 1
ACTIVATION_CODES = {"silu": 0, "relu": 1}
ACTIVATION_NAMES = {code: name for name, code in ACTIVATION_CODES.items()}


def forward(weights: TrainedDenoiser, u, sigma: float) -> np.ndarray:
    """Reference forward pass: float64 math over the stored f32 weights."""
    h = np.append(np.asarray(u, dtype=np.float64), np.log(sigma) / 4.0)
    for i, (w, b) in enumerate(weights.layers):
        h = w.astype(np.float64) @ h + b.astype(np.float64)
        if i != len(weights.layers) - 1:
            if weights.activation == "relu":
                h = np.maximum(h, 0.0)
            else:
                h = h / (1.0 + np.exp(-h))
    return h


def export_bpdm(weights: TrainedDenoiser, prefix, n_vectors: int = 10) -> tuple:
    """Write <prefix>.bpdm and <prefix>.vec; returns both paths."""
    bpdm_path = str(prefix) + ".bpdm"
    vec_path = str(prefix) + ".vec"

    with open(bpdm_path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack(
            "<IIII", VERSION, weights.dim, len(weights.layers),
            ACTIVATION_CODES[weights.activation],
        ))
        for w, b in weights.layers:
            f.write(struct.pack("<II", w.shape[0], w.shape[1]))
            f.write(w.astype("<f4").tobytes())
            f.write(b.astype("<f4").tobytes())

    # randomized test vectors in the trained sigma range, evaluated by the
    # reference forward pass above
    rng = np.random.default_rng(0x5EC7)
    log_lo, log_hi = np.log(weights.sigma_range[0]), np.log(weights.sigma_range[1])
    with open(vec_path, "wb") as f:
        f.write(struct.pack("<I", n_vectors))
        for _ in range(n_vectors):
            u = rng.standard_normal(weights.dim).astype(np.float32)
            sigma = np.float32(np.exp(rng.uniform(log_lo, log_hi)))
            out = forward(weights, u, float(sigma)).astype(np.float32)
            f.write(u.astype("<f4").tobytes())
            f.write(struct.pack("<f", sigma))
            f.write(out.astype("<f4").tobytes())
    return bpdm_path, vec_path


def read_bpdm(path) -> TrainedDenoiser:
    """Read a BPDM file back into trainer weights (round-trip checks)."""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: bad magic")
        version, dim, layer_count, activation = struct.unpack("<IIII", f.read(16))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if activation not in ACTIVATION_NAMES:
            raise ValueError(f"{path}: unknown activation code {activation}")
        layers = []
        for _ in range(layer_count):
            rows, cols = struct.unpack("<II", f.read(8))
            w = np.frombuffer(f.read(4 * rows * cols), dtype="<f4")
            layers.append((
                w.reshape(rows, cols).copy(),
                np.frombuffer(f.read(4 * rows), dtype="<f4").copy(),
            ))
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes")
    net = TrainedDenoiser(
        layers=layers,
        activation=ACTIVATION_NAMES[activation],
        sigma_range=(np.nan, np.nan),
    )
    if net.dim != dim:
        raise ValueError(f"{path}: header dim {dim} != layer dim {net.dim}")
    return net


def read_test_vectors(path) -> list:
    """[(input, sigma, expected_output), ...] from a .vec sidecar."""
    with open(path, "rb") as f:
        (count,) = struct.unpack("<I", f.read(4))
        payload = np.frombuffer(f.read(), dtype="<f4")
    if count == 0:
        return []
    rec = payload.size // count
    if payload.size != rec * count or rec % 2 != 1:
        raise ValueError(f"{path}: malformed payload")
    dim = (rec - 1) // 2
    payload = payload.reshape(count, rec)
    return [
        (row[:dim].copy(), float(row[dim]), row[dim + 1:].copy())
        for row in payload
    ]
