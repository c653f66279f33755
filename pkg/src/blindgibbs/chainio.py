"""Chain export: CSV manifest, per-iteration grids, and a binary dump.

Binary chain dump layout (little-endian):
    magic "BGCH" | version u32 = 1 | K u32 | image h, w u32 | kernel h, w u32 |
    aux flag u32 | per entry: rho_x f32, rho_theta f32, x f32[h*w],
    theta f32[kh*kw], then z f32[h*w] and v f32[kh*kw] if aux flag is 1
    (absent auxiliaries in an aux=1 dump are written as NaN payloads).
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .gibbs import GibbsChain
from .grids import Grid, save_csv

_MAGIC = b"BGCH"


def export_chain(chain: GibbsChain, run_dir, write_grids=True) -> None:
    """Write manifest.csv, timing.csv, and per-iteration grid CSVs.

    manifest.csv carries only deterministic quantities so that run outputs
    can be hashed; wall-clock timings go to timing.csv.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "manifest.csv", "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["iteration", "rho_x", "rho_theta", "x_norm", "theta_norm"])
        for e in chain.entries:
            wr.writerow(
                [
                    e.k,
                    f"{e.rho_x:.17g}",
                    f"{e.rho_theta:.17g}",
                    f"{np.linalg.norm(e.x.values):.17g}",
                    f"{np.linalg.norm(e.theta.values):.17g}",
                ]
            )
    with open(run_dir / "timing.csv", "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["iteration", "seconds"])
        for e in chain.entries:
            wr.writerow([e.k, f"{e.seconds:.6f}"])
    if write_grids:
        grids = run_dir / "iterations"
        grids.mkdir(exist_ok=True)
        for e in chain.entries:
            save_csv(e.x, grids / f"iter_{e.k:05d}_x.csv")
            save_csv(e.theta, grids / f"iter_{e.k:05d}_theta.csv")


def dump_chain_binary(chain: GibbsChain, path) -> None:
    e0 = chain.entries[0]
    ih, iw = e0.x.shape
    kh, kw = e0.theta.shape
    aux = int(any(e.z is not None for e in chain.entries))
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIIIIII", 1, len(chain.entries) - 1, ih, iw, kh, kw, aux))
        for e in chain.entries:
            f.write(struct.pack("<ff", e.rho_x, e.rho_theta))
            f.write(e.x.values.astype("<f4").tobytes())
            f.write(e.theta.values.astype("<f4").tobytes())
            if aux:
                z = e.z.values if e.z is not None else np.full((ih, iw), np.nan)
                v = e.v.values if e.v is not None else np.full((kh, kw), np.nan)
                f.write(z.astype("<f4").tobytes())
                f.write(v.astype("<f4").tobytes())


def load_chain_binary(path):
    """Read a binary dump back as lists of arrays (for offline analysis)."""
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: bad chain magic {data[:4]!r}")
    version, k, ih, iw, kh, kw, aux = struct.unpack_from("<IIIIIII", data, 4)
    if version != 1:
        raise ValueError(f"{path}: unsupported chain version {version}")
    off = 4 + 28
    entries = []
    for _ in range(k + 1):
        rho_x, rho_t = struct.unpack_from("<ff", data, off)
        off += 8
        x = np.frombuffer(data, dtype="<f4", count=ih * iw, offset=off).reshape(ih, iw)
        off += 4 * ih * iw
        theta = np.frombuffer(data, dtype="<f4", count=kh * kw, offset=off).reshape(kh, kw)
        off += 4 * kh * kw
        z = v = None
        if aux:
            z = np.frombuffer(data, dtype="<f4", count=ih * iw, offset=off).reshape(ih, iw)
            off += 4 * ih * iw
            v = np.frombuffer(data, dtype="<f4", count=kh * kw, offset=off).reshape(kh, kw)
            off += 4 * kh * kw
        entries.append((rho_x, rho_t, x.astype(np.float64), theta.astype(np.float64), z, v))
    return entries
