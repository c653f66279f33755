"""Denoiser training: an MLP D(u, sigma) under the standard denoising loss.

The network matches the BPDM forward convention exactly: input is the
corrupted sample with log(sigma)/4 appended, hidden layers use the chosen
activation, the output layer is linear and predicts the clean sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .datasets import make_dataset
from .spec import TrainSpec


class TrainingDivergedError(RuntimeError):
    """Non-finite loss encountered during training."""


@dataclass
class TrainedDenoiser:
    layers: list  # [(weight f32 (rows, cols), bias f32 (rows,)), ...]
    activation: str
    sigma_range: tuple
    history: list = field(default_factory=list)  # [(step, loss), ...]

    @property
    def dim(self) -> int:
        return self.layers[-1][0].shape[0]


def _build_mlp(dim: int, hidden: list, activation: str) -> torch.nn.Sequential:
    act = torch.nn.SiLU if activation == "silu" else torch.nn.ReLU
    widths = [dim + 1, *hidden, dim]
    modules = []
    for i in range(len(widths) - 1):
        modules.append(torch.nn.Linear(widths[i], widths[i + 1]))
        if i != len(widths) - 2:
            modules.append(act())
    return torch.nn.Sequential(*modules)


def train_denoiser(
    spec: TrainSpec,
    data: np.ndarray | None = None,
    log_path=None,
    log_every: int = 100,
) -> TrainedDenoiser:
    """Train an MLP denoiser; returns f32 weights plus the loss history.

    data overrides the spec's named dataset (rows are flattened samples
    of dimension spec.dim). The loss is E||D(x + sigma*xi, sigma) - x||^2
    with sigma log-uniform over spec.sigma_range.
    """
    if data is None:
        data = make_dataset(spec)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != spec.dim:
        raise ValueError(
            f"data must be (n, {spec.dim}), got {data.shape}"
        )

    torch.manual_seed(spec.seed)
    rng = np.random.default_rng(spec.seed + 1)
    device = torch.device("cpu")
    net = _build_mlp(spec.dim, spec.hidden, spec.activation).to(device)
    opt = torch.optim.Adam(net.parameters(), lr=spec.lr)
    samples = torch.as_tensor(data, dtype=torch.float32, device=device)

    log_lo, log_hi = np.log(spec.sigma_range[0]), np.log(spec.sigma_range[1])
    history = []
    for step in range(spec.steps):
        idx = torch.as_tensor(
            rng.integers(0, samples.shape[0], size=spec.batch)
        )
        x = samples[idx]
        sigma = torch.exp(
            torch.as_tensor(
                rng.uniform(log_lo, log_hi, size=(spec.batch, 1)),
                dtype=torch.float32,
            )
        )
        u = x + sigma * torch.randn_like(x)
        inputs = torch.cat([u, torch.log(sigma) / 4.0], dim=1)
        loss = torch.mean((net(inputs) - x) ** 2)
        if not torch.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite loss at step {step} "
                f"(lr {spec.lr}, batch {spec.batch})"
            )
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % log_every == 0 or step == spec.steps - 1:
            history.append((step, loss.item()))

    if log_path is not None:
        with open(log_path, "w") as f:
            f.write("step,loss\n")
            for step, loss in history:
                f.write(f"{step},{loss:.8g}\n")

    layers = []
    for module in net:
        if isinstance(module, torch.nn.Linear):
            layers.append((
                module.weight.detach().numpy().astype(np.float32),
                module.bias.detach().numpy().astype(np.float32),
            ))
    return TrainedDenoiser(
        layers=layers,
        activation=spec.activation,
        sigma_range=spec.sigma_range,
        history=history,
    )
