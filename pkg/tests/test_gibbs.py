"""Orchestrator mechanics: schedules, chain structure, determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blindgibbs import (
    DEFAULT_ANNEAL_THETA,
    DEFAULT_ANNEAL_X,
    AnnealSchedule,
    GaussianPrior,
    Grid,
    NoiseModel,
    SamplerConfig,
    anneal_rho,
    conv2d_circular,
    pnp_ista_step,
    posterior_stats,
    project_kernel,
    run_blind_pnpdm,
)
from blindgibbs.kernels import gaussian_kernel


def _tiny_setup(rng, K=3, record_aux=False):
    truth = Grid(rng.uniform(0, 1, (8, 8)))
    ker = gaussian_kernel(3, 0.8)
    y = Grid(conv2d_circular(truth, ker).values
             + 0.05 * rng.standard_normal((8, 8)))
    x0 = Grid(y.values.copy())
    theta0 = gaussian_kernel(3, 1.0)
    d_alpha = GaussianPrior(np.full(64, 0.5), 0.5)
    d_beta = GaussianPrior(theta0.flatten(), 0.1)
    cfg = SamplerConfig(K=K, noise=NoiseModel(0.05), seed=11,
                        record_aux=record_aux)
    return y, x0, theta0, d_alpha, d_beta, cfg


def test_anneal_rho_formula():
    s = AnnealSchedule(base=0.3, decay=0.9, floor=0.1)
    for k in range(40):
        assert anneal_rho(k, s) == max(0.9**k * 0.3, 0.1)
    with pytest.raises(ValueError):
        anneal_rho(-1, s)


def test_default_schedules_match_experiment_settings():
    assert DEFAULT_ANNEAL_X == AnnealSchedule(0.3, 0.9, 0.1)
    assert DEFAULT_ANNEAL_THETA == AnnealSchedule(0.1, 0.9, 0.05)


def test_anneal_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(base=0.3, decay=1.5, floor=0.1)
    with pytest.raises(ValueError):
        AnnealSchedule(base=0.3, decay=0.9, floor=0.0)
    with pytest.raises(ValueError):
        AnnealSchedule(base=0.1, decay=0.9, floor=0.3)


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(K=-1)
    with pytest.raises(ValueError):
        SamplerConfig(K=3, burn_in=4)


def test_chain_has_k_plus_one_entries(rng):
    y, x0, theta0, da, db, cfg = _tiny_setup(rng, K=3)
    chain = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    assert len(chain) == 4
    assert [e.k for e in chain.entries] == [0, 1, 2, 3]
    # entry 0 holds the initial state
    np.testing.assert_array_equal(chain.entries[0].x.values, x0.values)
    np.testing.assert_array_equal(chain.entries[0].theta.values, theta0.values)
    # the final entry has no auxiliaries by construction
    assert chain.entries[-1].z is None and chain.entries[-1].v is None


def test_chain_records_schedule(rng):
    y, x0, theta0, da, db, cfg = _tiny_setup(rng, K=5)
    chain = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    for e in chain.entries:
        assert e.rho_x == anneal_rho(e.k, cfg.anneal_x)
        assert e.rho_theta == anneal_rho(e.k, cfg.anneal_theta)


def test_record_aux_keeps_auxiliaries(rng):
    y, x0, theta0, da, db, cfg = _tiny_setup(rng, K=2, record_aux=True)
    chain = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    for e in chain.entries[:-1]:
        assert e.z is not None and e.v is not None
        assert e.z.shape == x0.shape and e.v.shape == theta0.shape


def test_same_seed_same_chain(rng):
    y, x0, theta0, da, db, cfg = _tiny_setup(rng, K=3)
    c1 = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    c2 = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    np.testing.assert_array_equal(c1.stack_x(), c2.stack_x())
    np.testing.assert_array_equal(c1.stack_theta(), c2.stack_theta())


def test_different_seed_different_chain(rng):
    import dataclasses

    y, x0, theta0, da, db, cfg = _tiny_setup(rng, K=3)
    c1 = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    c2 = run_blind_pnpdm(y, x0, theta0, da, db,
                         dataclasses.replace(cfg, seed=12))
    assert not np.array_equal(c1.stack_x()[-1], c2.stack_x()[-1])


def test_dim_mismatch_rejected(rng):
    y, x0, theta0, da, db, cfg = _tiny_setup(rng)
    bad_alpha = GaussianPrior(np.zeros(10), 1.0)
    with pytest.raises(ValueError, match="image model dim"):
        run_blind_pnpdm(y, x0, theta0, bad_alpha, db, cfg)
    bad_beta = GaussianPrior(np.zeros(10), 1.0)
    with pytest.raises(ValueError, match="kernel model dim"):
        run_blind_pnpdm(y, x0, theta0, da, bad_beta, cfg)


def test_step_failures_are_annotated(rng):
    from blindgibbs import DivergenceError, ScoreModel

    class Exploder(ScoreModel):
        dim = 64

        def denoise(self, u, sigma):
            with np.errstate(over="ignore"):
                return u * 1e300

        def score(self, u, sigma):
            return (self.denoise(u, sigma) - u) / sigma**2

    y, x0, theta0, _, db, cfg = _tiny_setup(rng, K=2)
    with pytest.raises(DivergenceError) as exc:
        run_blind_pnpdm(y, x0, theta0, Exploder(), db, cfg)
    assert exc.value.iteration == 0
    assert exc.value.step == "prior_x"


def test_posterior_stats_shapes_and_final(rng):
    y, x0, theta0, da, db, cfg = _tiny_setup(rng, K=4)
    chain = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    mean_x, std_x, mean_t, std_t, fx, ft = posterior_stats(chain, 2)
    assert mean_x.shape == x0.shape and std_x.shape == x0.shape
    assert mean_t.shape == theta0.shape and std_t.shape == theta0.shape
    np.testing.assert_array_equal(fx.values, chain.entries[-1].x.values)
    want = chain.stack_x()[2:].mean(axis=0)
    np.testing.assert_allclose(mean_x.values, want, atol=1e-15)
    with pytest.raises(ValueError):
        posterior_stats(chain, 5)


def test_zero_iteration_chain(rng):
    y, x0, theta0, da, db, _ = _tiny_setup(rng)
    cfg = SamplerConfig(K=0, noise=NoiseModel(0.05))
    chain = run_blind_pnpdm(y, x0, theta0, da, db, cfg)
    assert len(chain) == 1
    np.testing.assert_array_equal(chain.entries[0].x.values, x0.values)


def test_project_kernel_simplex(rng):
    theta = Grid(rng.standard_normal((3, 3)))
    proj = project_kernel(theta)
    assert np.all(proj.values >= 0)
    assert abs(proj.values.sum() - 1.0) <= 1e-12
    with pytest.raises(ValueError):
        project_kernel(Grid(-np.ones((2, 2))))


def test_project_kernel_idempotent(rng):
    theta = Grid(np.abs(rng.standard_normal((3, 3))))
    p1 = project_kernel(theta)
    p2 = project_kernel(p1)
    np.testing.assert_allclose(p1.values, p2.values, atol=1e-15)


def test_pnp_ista_step_gamma_zero_is_pure_denoise(rng):
    """The documented gamma = 0 degenerate case: a bare denoiser application."""
    x = Grid(rng.uniform(0, 1, (6, 6)))
    theta = gaussian_kernel(3, 0.8)
    y = conv2d_circular(x, theta)
    prior = GaussianPrior(np.full(36, 0.5), 0.5)
    out = pnp_ista_step(x, theta, y, 0.0, 0.1, prior, NoiseModel(0.1))
    want = prior.denoise(x.flatten(), 0.1)
    np.testing.assert_allclose(out.flatten(), want, atol=1e-14)
    with pytest.raises(ValueError):
        pnp_ista_step(x, theta, y, -0.1, 0.1, prior, NoiseModel(0.1))


def test_pnp_ista_fixed_point_on_noiseless_identity(rng):
    """With an identity-ish kernel, truth near the prior mean is near-fixed."""
    truth = Grid(np.full((6, 6), 0.5))
    ident = Grid(np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]))
    y = conv2d_circular(truth, ident)
    prior = GaussianPrior(np.full(36, 0.5), 1.0)
    out = pnp_ista_step(truth, ident, y, 0.01, 0.01, prior, NoiseModel(1.0))
    assert np.max(np.abs(out.values - truth.values)) <= 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60), st.floats(0.01, 1.0), st.floats(0.5, 1.0))
def test_anneal_rho_floor_property(k, floor_frac, decay):
    base = 0.3
    floor = base * floor_frac
    s = AnnealSchedule(base=base, decay=decay, floor=floor)
    rho = anneal_rho(k, s)
    assert floor <= rho <= base
    # monotone non-increasing in k
    assert rho >= anneal_rho(k + 1, s)
