"""Exact sampling of the likelihood-tilted Gaussians.

Both likelihood steps target a Gaussian
    N(Sigma b, Sigma),  Sigma = (A^T A / sigma_y^2 + I / rho^2)^-1,
    b = A^T y / sigma_y^2 + anchor / rho^2,
sampled by perturb-and-solve: perturb y and the anchor with their own noise,
then solve the normal equations. The solve is exact per frequency when the
operator is circulant, and conjugate-gradient otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import linalg as spla

from .errors import ConvergenceError
from .grids import Grid
from .operators import LinearOperator, NoiseModel

FOURIER_EXACT = "fourier-exact"
CONJUGATE_GRADIENT = "conjugate-gradient"


@dataclass(frozen=True)
class SolverConfig:
    method: str = FOURIER_EXACT
    cg_tol: float = 1e-10
    cg_max_iter: int = 500

    def __post_init__(self):
        if self.method not in (FOURIER_EXACT, CONJUGATE_GRADIENT):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not (self.cg_tol > 0):
            raise ValueError("cg_tol must be positive")


@dataclass(frozen=True)
class TiltedGaussianProblem:
    operator: LinearOperator
    measurement: np.ndarray
    anchor: np.ndarray
    rho: float
    sigma_y: float

    def __post_init__(self):
        object.__setattr__(
            self, "measurement", np.asarray(self.measurement, dtype=np.float64)
        )
        object.__setattr__(
            self, "anchor", np.asarray(self.anchor, dtype=np.float64)
        )
        if self.anchor.size != self.operator.input_dim:
            raise ValueError(
                f"anchor dim {self.anchor.size} != operator input dim "
                f"{self.operator.input_dim}"
            )
        if self.measurement.size != self.operator.output_dim:
            raise ValueError(
                f"measurement dim {self.measurement.size} != operator output "
                f"dim {self.operator.output_dim}"
            )
        if not (self.rho > 0):
            raise ValueError("rho must be positive")
        if not (self.sigma_y > 0):
            raise ValueError("sigma_y must be positive")


def _solve_normal(op, rhs, alpha, beta, cfg, x0=None):
    """Solve (alpha A^T A + beta I) z = rhs by the configured method."""
    if cfg.method == FOURIER_EXACT:
        solver = getattr(op, "solve_shifted_normal", None)
        if solver is None:
            raise ValueError(
                "fourier-exact solve requested but operator "
                f"{type(op).__name__} is not circulant"
            )
        return solver(rhs, alpha, beta)

    n = op.input_dim
    mat = spla.LinearOperator(
        (n, n), matvec=lambda v: alpha * op.normal_apply(v) + beta * v
    )
    z, info = spla.cg(
        mat, rhs, x0=x0, rtol=cfg.cg_tol, atol=0.0, maxiter=cfg.cg_max_iter
    )
    if info != 0:
        residual = np.linalg.norm(mat @ z - rhs) / np.linalg.norm(rhs)
        raise ConvergenceError(
            f"CG failed to reach tol {cfg.cg_tol} within {cfg.cg_max_iter} "
            f"iterations (relative residual {residual:.3e})",
            residual=residual,
        )
    return z


def sample_tilted_gaussian(
    p: TiltedGaussianProblem,
    cfg: SolverConfig,
    rng: np.random.Generator,
    mean_only: bool = False,
) -> np.ndarray:
    """One exact draw from N(Sigma b, Sigma) via perturb-and-solve.

    With mean_only=True the perturbations are suppressed and the output is
    the conditional mean Sigma b (deterministic; used for testing and a
    MAP-like variant).
    """
    alpha = 1.0 / p.sigma_y**2
    beta = 1.0 / p.rho**2
    if mean_only:
        y_pert = p.measurement
        anchor_pert = p.anchor
    else:
        y_pert = p.measurement + p.sigma_y * rng.standard_normal(p.measurement.size)
        anchor_pert = p.anchor + p.rho * rng.standard_normal(p.anchor.size)
    rhs = alpha * p.operator.adjoint(y_pert) + beta * anchor_pert
    return _solve_normal(p.operator, rhs, alpha, beta, cfg, x0=p.anchor)


def likelihood_step_x(
    x_k: Grid,
    theta_k: Grid,
    y: Grid,
    rho_x: float,
    noise: NoiseModel,
    cfg: SolverConfig,
    rng: np.random.Generator,
    operator: LinearOperator | None = None,
    mean_only: bool = False,
) -> Grid:
    """Sample the image auxiliary z given the current kernel.

    Convolution by theta_k is circulant, so the default fourier-exact path
    gives a non-iterative exact sample.
    """
    from .operators import ConvolutionOperator

    if operator is None:
        operator = ConvolutionOperator(theta_k, x_k.shape)
    p = TiltedGaussianProblem(
        operator=operator,
        measurement=y.flatten(),
        anchor=x_k.flatten(),
        rho=rho_x,
        sigma_y=noise.sigma_y,
    )
    z = sample_tilted_gaussian(p, cfg, rng, mean_only=mean_only)
    return Grid.from_flat(z, x_k.height, x_k.width)


def likelihood_step_theta(
    x_next: Grid,
    theta_k: Grid,
    y: Grid,
    rho_theta: float,
    noise: NoiseModel,
    cfg: SolverConfig,
    rng: np.random.Generator,
    operator: LinearOperator | None = None,
    mean_only: bool = False,
) -> Grid:
    """Sample the kernel auxiliary v given the freshly updated image.

    Uses B(x^(k+1)) with B(x) theta = A(theta) x. The kernel-space normal
    operator is circulant only when the kernel grid fills the image grid, so
    conjugate gradient is the default here.
    """
    from .operators import ThetaOperator

    if operator is None:
        operator = ThetaOperator(x_next, theta_k.shape)
    if cfg.method == FOURIER_EXACT and getattr(
        operator, "kernel_shape", None
    ) != getattr(operator, "image_shape", None):
        cfg = SolverConfig(
            method=CONJUGATE_GRADIENT, cg_tol=cfg.cg_tol, cg_max_iter=cfg.cg_max_iter
        )
    p = TiltedGaussianProblem(
        operator=operator,
        measurement=y.flatten(),
        anchor=theta_k.flatten(),
        rho=rho_theta,
        sigma_y=noise.sigma_y,
    )
    v = sample_tilted_gaussian(p, cfg, rng, mean_only=mean_only)
    return Grid.from_flat(v, theta_k.height, theta_k.width)
