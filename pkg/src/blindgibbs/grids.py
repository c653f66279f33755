"""2-D grids (images and blur kernels) and their on-disk formats.

Images round-trip through 8/16-bit PGM or PNG with intensities mapped
linearly onto [0, 1]; CSV is the lossless format and the only one suitable
for kernels (entries may be negative or tiny).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class Grid:
    """A height x width array of real values.

    Images are nominally in [0, 1]; kernels are unconstrained reals.
    All entries must be finite.
    """

    values: np.ndarray = field()

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"grid must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("grid must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def flatten(self) -> np.ndarray:
        """Row-major 1-D copy of the values."""
        return self.values.reshape(-1).copy()

    @classmethod
    def from_flat(cls, flat, height: int, width: int) -> "Grid":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != height * width:
            raise ValueError(
                f"flat length {flat.size} != {height}x{width}"
            )
        return cls(flat.reshape(height, width))


def save_csv(grid: Grid, path) -> None:
    """Write one CSV row per grid row, full double precision."""
    np.savetxt(path, grid.values, delimiter=",", fmt="%.17g")


def load_csv(path) -> Grid:
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return Grid(arr)


def save_pgm(grid: Grid, path, bits: int = 16) -> None:
    """Write a binary PGM (P5), mapping [0, 1] to the integer range."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = (1 << bits) - 1
    q = np.clip(np.rint(grid.values * maxval), 0, maxval)
    header = f"P5\n{grid.width} {grid.height}\n{maxval}\n".encode("ascii")
    payload = q.astype(">u2" if bits == 16 else np.uint8).tobytes()
    Path(path).write_bytes(header + payload)


def load_pgm(path) -> Grid:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM file")
    width, height, maxval = (int(g) for g in m.groups())
    raw = data[m.end():]
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    n = height * width
    arr = np.frombuffer(raw, dtype=dtype, count=n).astype(np.float64)
    return Grid(arr.reshape(height, width) / maxval)


def save_png(grid: Grid, path, bits: int = 8) -> None:
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = (1 << bits) - 1
    q = np.clip(np.rint(grid.values * maxval), 0, maxval)
    if bits == 8:
        img = Image.fromarray(q.astype(np.uint8), mode="L")
    else:
        img = Image.fromarray(q.astype(np.uint32), mode="I").convert("I;16")
    img.save(path, format="PNG")


def load_png(path) -> Grid:
    img = Image.open(path)
    if img.mode == "I;16":
        arr = np.asarray(img, dtype=np.float64) / 65535.0
    elif img.mode == "L":
        arr = np.asarray(img, dtype=np.float64) / 255.0
    else:
        arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return Grid(arr)


def save_image(grid: Grid, path, bits: int = 16) -> None:
    """Dispatch on file suffix (.pgm, .png, .csv)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        save_csv(grid, path)
    elif suffix == ".pgm":
        save_pgm(grid, path, bits=bits)
    elif suffix == ".png":
        save_png(grid, path, bits=bits)
    else:
        raise ValueError(f"unsupported image format: {suffix}")


def load_image(path) -> Grid:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return load_csv(path)
    if suffix == ".pgm":
        return load_pgm(path)
    if suffix == ".png":
        return load_png(path)
    raise ValueError(f"unsupported image format: {suffix}")
