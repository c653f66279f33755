"""Brute-force density oracles used by the verification suite.

GridOracle tabulates an unnormalized log-density on a small tensor grid
(total dimension <= 4), normalizes with the trapezoid rule, and exposes
marginals. stationary_oracle computes, by power iteration of the exact
closed-form transition kernel, the stationary law of the alternating blind
sampler on a conjugate (bilinear-Gaussian) test problem; every step of that
chain is linear-Gaussian given the conditioning block, so the kernel is
available in closed form with the auxiliary variables integrated out
analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import BilinearBlindModel
from .priors import GaussianPrior

MAX_ORACLE_DIM = 4


class GridOracle:
    """Normalized density tabulated on a tensor-product grid."""

    def __init__(self, axes, log_density):
        self.axes = [np.asarray(a, dtype=np.float64) for a in axes]
        if len(self.axes) > MAX_ORACLE_DIM:
            raise ValueError(
                f"oracle dimension {len(self.axes)} exceeds cap {MAX_ORACLE_DIM}"
            )
        log_density = np.asarray(log_density, dtype=np.float64)
        expected = tuple(a.size for a in self.axes)
        if log_density.shape != expected:
            raise ValueError(
                f"log-density shape {log_density.shape} != grid {expected}"
            )
        dens = np.exp(log_density - log_density.max())
        z = self._integrate(dens)
        if z <= 0 or not np.isfinite(z):
            raise ValueError("density has zero or non-finite total mass")
        self.density = dens / z

    def _integrate(self, values):
        out = values
        for axis_idx in reversed(range(len(self.axes))):
            out = np.trapezoid(out, x=self.axes[axis_idx], axis=axis_idx)
        return out

    @property
    def total_mass(self) -> float:
        return float(self._integrate(self.density))

    def marginal(self, axis: int):
        """(coordinates, normalized 1-D density) for one axis."""
        dens = self.density
        for other in reversed(range(len(self.axes))):
            if other == axis:
                continue
            dens = np.trapezoid(dens, x=self.axes[other], axis=other)
        z = np.trapezoid(dens, x=self.axes[axis])
        return self.axes[axis], dens / z

    def bin_edges(self, axis: int):
        """Cell edges (midpoints between grid nodes, extended at the ends)."""
        g = self.axes[axis]
        mid = (g[:-1] + g[1:]) / 2.0
        return np.concatenate(
            [[g[0] - (g[1] - g[0]) / 2], mid, [g[-1] + (g[-1] - g[-2]) / 2]]
        )

    def marginal_probs(self, axis: int):
        """Per-cell probability masses aligned with bin_edges(axis)."""
        coords, dens = self.marginal(axis)
        widths = np.diff(self.bin_edges(axis))
        p = dens * widths
        return p / p.sum()

    def mean_var(self, axis: int):
        coords, dens = self.marginal(axis)
        w = dens / np.trapezoid(dens, x=coords)
        mean = np.trapezoid(w * coords, x=coords)
        var = np.trapezoid(w * (coords - mean) ** 2, x=coords)
        return float(mean), float(var)

    def export_marginal_csv(self, axis: int, path):
        coords, dens = self.marginal(axis)
        np.savetxt(
            path,
            np.column_stack([coords, dens]),
            delimiter=",",
            fmt="%.12g",
            header="coordinate,density",
            comments="",
        )


def build_grid_oracle(log_density_fn, ranges, resolution) -> GridOracle:
    """Tabulate exp(log_density_fn) on the tensor grid and normalize.

    log_density_fn takes an (N, d) array of points and returns N log
    densities (unnormalized). ranges is a list of (lo, hi) per dimension;
    resolution is points per axis (int or list).
    """
    d = len(ranges)
    if d > MAX_ORACLE_DIM:
        raise ValueError(f"oracle dimension {d} exceeds cap {MAX_ORACLE_DIM}")
    if np.isscalar(resolution):
        resolution = [int(resolution)] * d
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(ranges, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    logd = np.asarray(log_density_fn(pts), dtype=np.float64).reshape(
        tuple(a.size for a in axes)
    )
    return GridOracle(axes, logd)


@dataclass(frozen=True)
class ConjugateBlindProblem:
    """Bilinear-Gaussian test problem: y = (sum_i theta_i M_i) x + e."""

    model: BilinearBlindModel
    y: np.ndarray
    sigma_y: float
    prior_x: GaussianPrior
    prior_theta: GaussianPrior
    rho_x: float
    rho_theta: float


def _x_block_kernel(problem: ConjugateBlindProblem, theta):
    """x' | x as (mat, const, cov): exact composition of the two x-steps."""
    from .grids import Grid

    a_mat = problem.model.image_operator(
        Grid(np.atleast_2d(theta))
    ).matrix
    n = problem.prior_x.dim
    rho2 = problem.rho_x**2
    s2 = problem.prior_x.std**2
    sz = np.linalg.inv(a_mat.T @ a_mat / problem.sigma_y**2 + np.eye(n) / rho2)
    shrink = s2 / (s2 + rho2)
    mat = shrink * sz / rho2
    const = shrink * (sz @ (a_mat.T @ problem.y)) / problem.sigma_y**2 + (
        rho2 * problem.prior_x.mean / (s2 + rho2)
    )
    cov = shrink**2 * sz + (s2 * rho2 / (s2 + rho2)) * np.eye(n)
    return mat, const, cov


def _theta_block_kernel(problem: ConjugateBlindProblem, x):
    from .grids import Grid

    b_mat = problem.model.theta_operator(Grid(np.atleast_2d(x))).matrix
    b = problem.prior_theta.dim
    rho2 = problem.rho_theta**2
    s2 = problem.prior_theta.std**2
    sv = np.linalg.inv(b_mat.T @ b_mat / problem.sigma_y**2 + np.eye(b) / rho2)
    shrink = s2 / (s2 + rho2)
    mat = shrink * sv / rho2
    const = shrink * (sv @ (b_mat.T @ problem.y)) / problem.sigma_y**2 + (
        rho2 * problem.prior_theta.mean / (s2 + rho2)
    )
    cov = shrink**2 * sv + (s2 * rho2 / (s2 + rho2)) * np.eye(b)
    return mat, const, cov


def _gaussian_transition(points, mat, const, cov):
    """Row-stochastic transition matrix between grid points."""
    mean = points @ mat.T + const
    prec = np.linalg.inv(cov)
    d = points[None, :, :] - mean[:, None, :]
    q = np.einsum("abi,ij,abj->ab", d, prec, d)
    k = np.exp(-0.5 * (q - q.min(axis=1, keepdims=True)))
    return k / k.sum(axis=1, keepdims=True)


def stationary_oracle(
    problem: ConjugateBlindProblem,
    ranges,
    resolution,
    tol=1e-11,
    max_iter=20000,
) -> GridOracle:
    """Stationary law of the alternating sampler, by kernel power iteration.

    ranges/resolution cover (x_1, ..., x_n, theta_1, ..., theta_b) in that
    order; total dimension is capped at 4. The returned GridOracle holds the
    stationary joint over the grid.
    """
    n = problem.prior_x.dim
    b = problem.prior_theta.dim
    if n + b != len(ranges):
        raise ValueError("ranges must cover image dims then kernel dims")
    if n + b > MAX_ORACLE_DIM:
        raise ValueError(f"total dimension {n + b} exceeds cap {MAX_ORACLE_DIM}")
    if np.isscalar(resolution):
        resolution = [int(resolution)] * (n + b)
    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(ranges, resolution)]
    x_axes, t_axes = axes[:n], axes[n:]
    x_mesh = np.meshgrid(*x_axes, indexing="ij")
    x_pts = np.stack([m.ravel() for m in x_mesh], axis=1)
    t_mesh = np.meshgrid(*t_axes, indexing="ij")
    t_pts = np.stack([m.ravel() for m in t_mesh], axis=1)
    nx, nt = x_pts.shape[0], t_pts.shape[0]

    kx = np.empty((nt, nx, nx))
    for j in range(nt):
        kx[j] = _gaussian_transition(x_pts, *_x_block_kernel(problem, t_pts[j]))
    kt = np.empty((nx, nt, nt))
    for i in range(nx):
        kt[i] = _gaussian_transition(t_pts, *_theta_block_kernel(problem, x_pts[i]))

    pi = np.full((nx, nt), 1.0 / (nx * nt))
    for _ in range(max_iter):
        # x-block: for each theta cell j, push pi(:, j) through kx[j]
        mixed_x = (pi.T[:, None, :] @ kx)[:, 0, :].T  # (nx, nt)
        # theta-block: for each new x cell y, push mixed_x(y, :) through kt[y]
        new_pi = (mixed_x[:, None, :] @ kt)[:, 0, :]
        delta = np.abs(new_pi - pi).sum()
        pi = new_pi
        if delta < tol:
            break

    # convert cell masses to a density tabulation for GridOracle
    dens = pi.reshape(tuple(a.size for a in axes))
    with np.errstate(divide="ignore"):
        logd = np.log(dens)
    logd[~np.isfinite(logd)] = -745.0  # smallest double exponent
    return GridOracle(axes, logd)
