"""Blind posterior sampling for deconvolution with denoiser priors.

Joint recovery of an image and the blur kernel that produced its
measurement, by alternating split-Gibbs blocks: exact tilted-Gaussian
likelihood steps and reverse-diffusion prior steps, with annealed coupling
strengths. Ships analytic (Gaussian / mixture) priors with closed-form
oracles for verification, desk-scale blind deblurring, and a CLI.
"""

from .chainio import dump_chain_binary, export_chain, load_chain_binary
from .edm import EdmConfig, karras_sigmas, prior_step, prior_step_grid
from .errors import (
    BadMagicError,
    BlindGibbsError,
    ConvergenceError,
    DimensionChainError,
    DivergenceError,
    TruncatedFileError,
    UnsupportedVersionError,
    WeightFormatError,
)
from .gibbs import (
    DEFAULT_ANNEAL_THETA,
    DEFAULT_ANNEAL_X,
    AnnealSchedule,
    ChainEntry,
    GibbsChain,
    SamplerConfig,
    anneal_rho,
    pnp_ista_step,
    posterior_stats,
    project_kernel,
    run_blind_pnpdm,
)
from .grids import (
    Grid,
    load_csv,
    load_image,
    load_pgm,
    load_png,
    save_csv,
    save_image,
    save_pgm,
    save_png,
)
from .likelihood import (
    CONJUGATE_GRADIENT,
    FOURIER_EXACT,
    SolverConfig,
    TiltedGaussianProblem,
    likelihood_step_theta,
    likelihood_step_x,
    sample_tilted_gaussian,
)
from .metrics import MetricReport, kernel_error, psnr, ssim, tv_distance
from .operators import (
    BilinearBlindModel,
    BlindForwardModel,
    ConvolutionBlindModel,
    ConvolutionOperator,
    DenseOperator,
    LinearOperator,
    NoiseModel,
    ThetaOperator,
    as_theta_operator,
    conv2d_adjoint,
    conv2d_circular,
    dense_operator,
)
from .oracle import (
    ConjugateBlindProblem,
    GridOracle,
    build_grid_oracle,
    stationary_oracle,
)
from .priors import (
    ACTIVATION_RELU,
    ACTIVATION_SILU,
    GaussianPrior,
    GmmPrior,
    NeuralDenoiser,
    ScoreModel,
    gaussian_denoise,
    gmm_denoise,
    load_score_net,
    load_test_vectors,
    net_denoise,
    save_score_net,
    save_test_vectors,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
