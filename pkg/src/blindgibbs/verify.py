"""Conjugate verification problems: chain-vs-oracle TV checks.

The desk-scale conjugate problem is small enough (x in R^2, theta in R) to
tabulate exactly, Gaussian everywhere so every step has a closed form, and
bilinear in (x, theta) so both blocks are exact tilted Gaussians. Running
the real sampler on it and comparing marginals against the power-iteration
stationary oracle validates the whole loop end to end.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .edm import EdmConfig
from .gibbs import AnnealSchedule, SamplerConfig, run_blind_pnpdm
from .grids import Grid
from .likelihood import CONJUGATE_GRADIENT, SolverConfig
from .metrics import tv_distance
from .operators import BilinearBlindModel, NoiseModel
from .oracle import ConjugateBlindProblem, GridOracle, stationary_oracle
from .priors import GaussianPrior


@dataclass
class ConjugateCheckResult:
    tv: dict
    oracle: GridOracle
    samples: np.ndarray
    names: list

    def worst_tv(self) -> float:
        return max(self.tv.values())


def default_conjugate_problem(rho_x=0.2, rho_theta=0.2, sigma_y=0.15):
    """The standard tiny blind problem: x in R^2, theta scalar, A = theta M."""
    m = np.array([[1.0, 0.4], [-0.3, 0.8]])
    model = BilinearBlindModel([m])
    prior_x = GaussianPrior(np.array([0.3, -0.2]), 1.0)
    prior_theta = GaussianPrior(np.array([0.9]), 0.6)
    x_true = np.array([0.5, -0.4])
    theta_true = 1.1
    y = theta_true * (m @ x_true) + np.array([0.01, -0.02])
    return ConjugateBlindProblem(
        model=model,
        y=y,
        sigma_y=sigma_y,
        prior_x=prior_x,
        prior_theta=prior_theta,
        rho_x=rho_x,
        rho_theta=rho_theta,
    )


def run_conjugate_chain(
    problem: ConjugateBlindProblem,
    iterations: int = 50_000,
    seed: int = 7,
    n_steps: int = 30,
    burn_fraction: float = 0.5,
) -> np.ndarray:
    """Post-burn-in (x, theta) samples from the real sampler, fixed rho."""
    const = AnnealSchedule  # fixed rho: base == floor, no annealing
    cfg = SamplerConfig(
        K=iterations,
        anneal_x=const(problem.rho_x, 1.0, problem.rho_x),
        anneal_theta=const(problem.rho_theta, 1.0, problem.rho_theta),
        edm_x=EdmConfig(n_steps=n_steps),
        edm_theta=EdmConfig(n_steps=n_steps),
        solver=SolverConfig(method=CONJUGATE_GRADIENT),
        noise=NoiseModel(sigma_y=problem.sigma_y),
        seed=seed,
    )
    x0 = Grid(np.zeros((1, problem.prior_x.dim)))
    theta0 = Grid(np.full((1, problem.prior_theta.dim), 0.5))
    chain = run_blind_pnpdm(
        y=Grid(problem.y.reshape(1, -1)),
        x0=x0,
        theta0=theta0,
        d_alpha=problem.prior_x,
        d_beta=problem.prior_theta,
        cfg=cfg,
        forward=problem.model,
    )
    burn = int(burn_fraction * iterations)
    xs = chain.stack_x()[burn:].reshape(-1, problem.prior_x.dim)
    ts = chain.stack_theta()[burn:].reshape(-1, problem.prior_theta.dim)
    return np.column_stack([xs, ts])


def compare_to_oracle(
    samples: np.ndarray,
    problem: ConjugateBlindProblem,
    resolution: int = 41,
    oracle_rho_factor: float = 1.0,
) -> ConjugateCheckResult:
    """Per-marginal TV between sample histograms and the stationary oracle.

    oracle_rho_factor != 1 builds a deliberately mis-specified oracle
    (negative control: TV should then be large).
    """
    n_dims = problem.prior_x.dim + problem.prior_theta.dim
    ranges = []
    for d in range(n_dims):
        mu, sd = samples[:, d].mean(), samples[:, d].std()
        ranges.append((mu - 5 * sd, mu + 5 * sd))

    oracle_problem = problem
    if oracle_rho_factor != 1.0:
        oracle_problem = replace(
            problem,
            rho_x=problem.rho_x * oracle_rho_factor,
            rho_theta=problem.rho_theta * oracle_rho_factor,
        )
    oracle = stationary_oracle(oracle_problem, ranges, resolution)

    names = [f"x{i + 1}" for i in range(problem.prior_x.dim)] + [
        f"theta{i + 1}" for i in range(problem.prior_theta.dim)
    ]
    tvs = {}
    for axis, name in enumerate(names):
        counts, _ = np.histogram(samples[:, axis], bins=oracle.bin_edges(axis))
        tvs[name] = tv_distance(counts, oracle.marginal_probs(axis))
    return ConjugateCheckResult(tv=tvs, oracle=oracle, samples=samples, names=names)


def run_conjugate_check(
    problem: ConjugateBlindProblem | None = None,
    iterations: int = 50_000,
    seed: int = 7,
    n_steps: int = 30,
    resolution: int = 41,
    oracle_rho_factor: float = 1.0,
    burn_fraction: float = 0.5,
) -> ConjugateCheckResult:
    """Convenience wrapper: run the chain, then compare against the oracle."""
    if problem is None:
        problem = default_conjugate_problem()
    samples = run_conjugate_chain(
        problem, iterations=iterations, seed=seed, n_steps=n_steps,
        burn_fraction=burn_fraction,
    )
    return compare_to_oracle(
        samples, problem, resolution=resolution,
        oracle_rho_factor=oracle_rho_factor,
    )
