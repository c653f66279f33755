"""Training specification: a small validated dataclass loaded from JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

DATASETS = (
    "synthetic-kernels-gaussian",
    "synthetic-kernels-motion",
    "synthetic-images-blobs",
)
ACTIVATIONS = ("silu", "relu")


class SpecError(ValueError):
    """Invalid training specification."""


@dataclass
class TrainSpec:
    dataset: str
    grid_size: int
    hidden: list[int] = field(default_factory=lambda: [128, 128])
    activation: str = "silu"
    sigma_range: tuple[float, float] = (0.01, 0.5)
    steps: int = 10_000
    batch: int = 128
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise SpecError(
                f"unknown dataset {self.dataset!r}; expected one of {DATASETS}"
            )
        if self.activation not in ACTIVATIONS:
            raise SpecError(
                f"unknown activation {self.activation!r}; "
                f"expected one of {ACTIVATIONS}"
            )
        if self.grid_size < 1:
            raise SpecError(f"grid_size must be positive, got {self.grid_size}")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise SpecError(f"hidden widths must be positive, got {self.hidden}")
        lo, hi = self.sigma_range
        if not (0 < lo < hi):
            raise SpecError(
                f"sigma_range must satisfy 0 < min < max, got {self.sigma_range}"
            )
        self.sigma_range = (float(lo), float(hi))
        if self.steps < 1 or self.batch < 1:
            raise SpecError("steps and batch must be positive")
        if not (self.lr > 0):
            raise SpecError(f"lr must be positive, got {self.lr}")

    @property
    def dim(self) -> int:
        return self.grid_size * self.grid_size


def load_spec(path) -> TrainSpec:
    """Load and validate a TrainSpec from a JSON file."""
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as err:
            raise SpecError(f"{path}: invalid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: top level must be an object")
    known = set(TrainSpec.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise SpecError(f"{path}: unknown keys {sorted(extra)}")
    if "sigma_range" in raw:
        raw["sigma_range"] = tuple(raw["sigma_range"])
    try:
        return TrainSpec(**raw)
    except TypeError as err:
        raise SpecError(f"{path}: {err}") from err
