"""Prior-step sampling by partial reverse diffusion.

The target is the tilted density exp(-g(x) - ||x - anchor||^2 / (2 rho^2)):
exactly the law of the clean signal given a noisy observation at level rho.
We therefore initialize at the anchor with sigma_0 = rho (variance-exploding
parameterization, sigma(t) = t, s(t) = 1) and integrate the stochastic
reverse update down a Karras-style sigma ladder:

    x <- x + (s_i^2 - s_{i+1}^2) * score(x, s_i) + sqrt(s_i^2 - s_{i+1}^2) * xi

with a final deterministic denoiser evaluation at the last positive sigma.
The stochastic (ancestral) update, not the probability-flow ODE, is required:
the ODE maps a fixed anchor to a single point and cannot represent the
conditional's spread.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .grids import Grid
from .priors import ScoreModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdmConfig:
    sigma_min: float = 0.002
    n_steps: int = 40
    rho_exp: float = 7.0  # schedule curvature
    churn: float = 0.0  # extra per-rung re-noising; aids mixing, costs exactness

    def __post_init__(self):
        if not (self.sigma_min > 0):
            raise ValueError("sigma_min must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not (self.rho_exp > 0):
            raise ValueError("rho_exp must be positive")
        if self.churn < 0:
            raise ValueError("churn must be nonnegative")


def karras_sigmas(rho_level: float, cfg: EdmConfig) -> np.ndarray:
    """Noise ladder from rho_level down to sigma_min, plus a terminal 0.

    sigma_i = (r^(1/p) + i/(N-1) * (s_min^(1/p) - r^(1/p)))^p for i = 0..N-1,
    with p = cfg.rho_exp.
    """
    if rho_level <= cfg.sigma_min:
        logger.warning(
            "rho_level %.3g <= sigma_min %.3g; using trivial ladder",
            rho_level, cfg.sigma_min,
        )
        return np.array([rho_level, 0.0])
    p = cfg.rho_exp
    n = cfg.n_steps
    if n == 1:
        sigmas = np.array([rho_level])
    else:
        t = np.arange(n) / (n - 1)
        sigmas = (
            rho_level ** (1 / p)
            + t * (cfg.sigma_min ** (1 / p) - rho_level ** (1 / p))
        ) ** p
        # guard endpoint roundoff
        sigmas[0] = rho_level
        sigmas[-1] = cfg.sigma_min
    return np.append(sigmas, 0.0)


def prior_step(
    anchor: np.ndarray,
    rho_level: float,
    model: ScoreModel,
    cfg: EdmConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one approximate sample from exp(-g(x) - ||x-anchor||^2/(2 rho^2))."""
    if not (rho_level > 0):
        raise ValueError("rho_level must be positive")
    anchor = np.asarray(anchor, dtype=np.float64)
    if anchor.size != model.dim:
        raise ValueError(f"anchor dim {anchor.size} != model dim {model.dim}")

    sigmas = karras_sigmas(rho_level, cfg)
    x = anchor.copy()
    for i in range(len(sigmas) - 1):
        s, s_next = sigmas[i], sigmas[i + 1]
        if cfg.churn > 0 and s_next > 0:
            s_hat = s * (1.0 + cfg.churn)
            x = x + np.sqrt(s_hat**2 - s**2) * rng.standard_normal(x.size)
            s = s_hat
        if s_next == 0.0:
            x = model.denoise(x, s)
        else:
            d2 = s**2 - s_next**2
            x = x + d2 * model.score(x, s) + np.sqrt(d2) * rng.standard_normal(x.size)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(
                f"non-finite state at ladder rung {i} (sigma {s:.4g})", rung=i
            )
    return x


def prior_step_grid(
    anchor: Grid,
    rho_level: float,
    model: ScoreModel,
    cfg: EdmConfig,
    rng: np.random.Generator,
) -> Grid:
    """prior_step on a row-major flattened Grid, shape preserved."""
    out = prior_step(anchor.flatten(), rho_level, model, cfg, rng)
    return Grid.from_flat(out, anchor.height, anchor.width)
