"""Command-line front end: simulate | sample | eval | oracle.

Configs are JSON validated against CONFIG_SCHEMA before any computation;
unknown keys are rejected. Physics-relevant parameters (seed, sigma_y, K)
must be explicit in the config; everything else falls back to the packaged
defaults.json, which is the documented defaults file.

Exit codes: 0 success, 1 validation failure, 2 runtime/divergence failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import grids, kernels, metrics
from .edm import EdmConfig
from .errors import BlindGibbsError
from .gibbs import (
    AnnealSchedule,
    SamplerConfig,
    posterior_stats,
    project_kernel,
    run_blind_pnpdm,
)
from .chainio import dump_chain_binary, export_chain
from .grids import Grid, load_image, save_csv, save_image
from .likelihood import SolverConfig
from .operators import NoiseModel, conv2d_adjoint, conv2d_circular
from .priors import GaussianPrior, GmmPrior, load_score_net
from .rngs import substream
from .verify import default_conjugate_problem, run_conjugate_check
from .oracle import ConjugateBlindProblem

_ANNEAL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["base", "decay", "floor"],
    "properties": {
        "base": {"type": "number", "exclusiveMinimum": 0},
        "decay": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "floor": {"type": "number", "exclusiveMinimum": 0},
    },
}

_EDM = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "sigma_min": {"type": "number", "exclusiveMinimum": 0},
        "n_steps": {"type": "integer", "minimum": 1},
        "rho_exp": {"type": "number", "exclusiveMinimum": 0},
        "churn": {"type": "number", "minimum": 0},
    },
}

_PRIOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["gaussian", "gmm", "bpdm"]},
        "mean": {"type": ["number", "string"]},
        "std": {"type": "number", "exclusiveMinimum": 0},
        "mean_std": {"type": "number", "exclusiveMinimum": 0},
        "weights": {"type": "array", "items": {"type": "number"}},
        "means": {"type": "array", "items": {"type": ["number", "string"]}},
        "stds": {"type": "array", "items": {"type": "number"}},
        "path": {"type": "string"},
        "sigma_range": {
            "type": "array", "items": {"type": "number"},
            "minItems": 2, "maxItems": 2,
        },
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["seed"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["sigma_y"],
            "properties": {
                "bundle": {"type": "string"},
                "image": {"type": "string"},
                "image_size": {"type": "integer", "minimum": 11},
                "kernel": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "size"],
                    "properties": {
                        "type": {"enum": ["gaussian", "motion"]},
                        "size": {"type": "integer", "minimum": 1},
                        "std": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "sigma_y": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "priors": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"image": _PRIOR, "kernel": _PRIOR},
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "K": {"type": "integer", "minimum": 0},
                "burn_in": {"type": ["integer", "null"], "minimum": 0},
                "record_aux": {"type": "boolean"},
                "anneal_x": _ANNEAL,
                "anneal_theta": _ANNEAL,
                "edm_x": _EDM,
                "edm_theta": _EDM,
                "solver": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "method": {"enum": ["fourier-exact", "conjugate-gradient"]},
                        "cg_tol": {"type": "number", "exclusiveMinimum": 0},
                        "cg_max_iter": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "write_iterations": {"type": "boolean"},
                "binary_dump": {"type": "boolean"},
            },
        },
        "metrics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "psnr": {"type": "boolean"},
                "ssim": {"type": "boolean"},
                "kernel": {"type": "boolean"},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iterations": {"type": "integer", "minimum": 1},
                "rho_x": {"type": "number", "exclusiveMinimum": 0},
                "rho_theta": {"type": "number", "exclusiveMinimum": 0},
                "sigma_y": {"type": "number", "exclusiveMinimum": 0},
                "resolution": {"type": "integer", "minimum": 11},
                "n_steps": {"type": "integer", "minimum": 1},
                "tv_threshold": {"type": "number", "exclusiveMinimum": 0},
                "negative_control": {"type": "boolean"},
                "wrong_rho_factor": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


def load_defaults() -> dict:
    with resources.files("blindgibbs").joinpath("defaults.json").open() as f:
        return json.load(f)


def _merge(defaults, overrides):
    if not isinstance(defaults, dict) or not isinstance(overrides, dict):
        return overrides
    out = dict(defaults)
    for k, v in overrides.items():
        out[k] = _merge(defaults.get(k), v) if k in defaults else v
    return out


class ConfigError(BlindGibbsError):
    pass


def load_config(path) -> tuple[dict, bytes]:
    """Validate and return (merged config, raw bytes for echoing)."""
    raw = Path(path).read_bytes()
    try:
        user = json.loads(raw)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from err
    try:
        jsonschema.validate(user, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"{path}: schema violation: {err.message}") from err
    return _merge(load_defaults(), user), raw


def _require(cfg, *keys):
    cur = cfg
    for k in keys:
        if not isinstance(cur, dict) or k not in cur or cur[k] is None:
            raise ConfigError(f"config is missing required key {'.'.join(keys)}")
        cur = cur[k]
    return cur


def build_prior(spec: dict, dim: int, kernel_size: int | None = None):
    kind = spec["type"]
    if kind == "gaussian":
        mean = spec.get("mean", 0.0)
        if mean == "centered-gaussian":
            if kernel_size is None:
                raise ConfigError("centered-gaussian mean is kernel-only")
            mean_vec = kernels.gaussian_kernel(
                kernel_size, spec.get("mean_std", 1.0)
            ).flatten()
        else:
            mean_vec = np.full(dim, float(mean))
        return GaussianPrior(mean_vec, spec.get("std", 1.0))
    if kind == "gmm":
        for key in ("weights", "means", "stds"):
            if key not in spec:
                raise ConfigError(f"gmm prior requires {key}")
        means = []
        for m in spec["means"]:
            # scalar means broadcast; string means are CSV paths to
            # prototype grids (used for image priors over known scenes)
            if isinstance(m, str):
                vec = grids.load_csv(m).flatten()
                if vec.size != dim:
                    raise ConfigError(
                        f"gmm mean grid {m} has dim {vec.size}, expected {dim}"
                    )
                means.append(vec)
            else:
                means.append(np.full(dim, float(m)))
        return GmmPrior(spec["weights"], means, spec["stds"])
    if kind == "bpdm":
        if "path" not in spec:
            raise ConfigError("bpdm prior requires a path")
        net = load_score_net(spec["path"], sigma_range=spec.get("sigma_range"))
        if net.dim != dim:
            raise ConfigError(f"bpdm model dim {net.dim} != problem dim {dim}")
        return net
    raise ConfigError(f"unknown prior type {kind}")


def cmd_simulate(cfg: dict, raw: bytes, out_dir: Path) -> None:
    problem = _require(cfg, "problem")
    sigma_y = _require(cfg, "problem", "sigma_y")
    kspec = _require(cfg, "problem", "kernel")
    seed = cfg["seed"]
    out_dir.mkdir(parents=True, exist_ok=True)

    img_rng = substream(seed, "simulate/image")
    if "image" in problem and problem["image"] not in ("blobs", "checker"):
        truth = load_image(problem["image"])
    else:
        size = problem.get("image_size", 64)
        gen = problem.get("image", "blobs")
        truth = (
            kernels.blobs_image(size, img_rng)
            if gen == "blobs"
            else kernels.checker_image(size)
        )

    if kspec["type"] == "gaussian":
        kernel = kernels.gaussian_kernel(kspec["size"], kspec.get("std", 1.5))
    else:
        kernel = kernels.motion_kernel(kspec["size"], substream(seed, "simulate/kernel"))

    blurred = conv2d_circular(truth, kernel)
    noise_rng = substream(seed, "simulate/noise")
    y = Grid(blurred.values + sigma_y * noise_rng.standard_normal(truth.shape))

    save_csv(truth, out_dir / "truth_image.csv")
    save_image(truth, out_dir / "truth_image.png", bits=16)
    save_csv(kernel, out_dir / "truth_kernel.csv")
    save_csv(y, out_dir / "measurement.csv")
    save_image(Grid(np.clip(y.values, 0, 1)), out_dir / "measurement.png", bits=16)
    (out_dir / "manifest.json").write_bytes(raw)
    print(f"simulate: wrote problem bundle to {out_dir}")


def _sampler_config(cfg: dict, sigma_y: float) -> SamplerConfig:
    s = cfg.get("sampler", {})
    k = _require(cfg, "sampler", "K")
    burn = s.get("burn_in")
    if burn is None:
        burn = k // 2
    return SamplerConfig(
        K=k,
        anneal_x=AnnealSchedule(**s["anneal_x"]),
        anneal_theta=AnnealSchedule(**s["anneal_theta"]),
        edm_x=EdmConfig(**s["edm_x"]),
        edm_theta=EdmConfig(**s["edm_theta"]),
        solver=SolverConfig(**s["solver"]),
        noise=NoiseModel(sigma_y=sigma_y),
        seed=cfg["seed"],
        burn_in=burn,
        record_aux=s.get("record_aux", False),
    )


def cmd_sample(cfg: dict, raw: bytes, out_dir: Path) -> None:
    bundle = Path(_require(cfg, "problem", "bundle"))
    y = grids.load_csv(bundle / "measurement.csv")
    sigma_y = _require(cfg, "problem", "sigma_y")
    ksize = _require(cfg, "problem", "kernel")["size"]
    scfg = _sampler_config(cfg, sigma_y)

    theta0 = kernels.gaussian_kernel(ksize, 1.0)
    x0 = conv2d_adjoint(y, theta0)

    priors = cfg.get("priors", {})
    image_dim = y.height * y.width
    d_alpha = build_prior(
        priors.get("image", {"type": "gaussian", "mean": 0.5, "std": 0.5}),
        image_dim,
    )
    d_beta = build_prior(
        priors.get(
            "kernel",
            {"type": "gaussian", "mean": "centered-gaussian", "std": 0.05},
        ),
        ksize * ksize,
        kernel_size=ksize,
    )

    chain = run_blind_pnpdm(y, x0, theta0, d_alpha, d_beta, scfg)

    out_dir.mkdir(parents=True, exist_ok=True)
    out_cfg = cfg.get("output", {})
    export_chain(chain, out_dir, write_grids=out_cfg.get("write_iterations", True))
    if out_cfg.get("binary_dump", False):
        dump_chain_binary(chain, out_dir / "chain.bin")

    mean_x, std_x, mean_t, std_t, final_x, final_t = posterior_stats(
        chain, scfg.burn_in
    )
    for name, g in [
        ("mean_x", mean_x), ("std_x", std_x), ("final_x", final_x),
        ("mean_theta", mean_t), ("std_theta", std_t), ("final_theta", final_t),
    ]:
        save_csv(g, out_dir / f"{name}.csv")
    save_image(Grid(np.clip(mean_x.values, 0, 1)), out_dir / "mean_x.png", bits=16)
    save_image(Grid(np.clip(final_x.values, 0, 1)), out_dir / "final_x.png", bits=16)
    for name, g in [("mean_theta", mean_t), ("final_theta", final_t)]:
        try:
            save_csv(project_kernel(g), out_dir / f"{name}_projected.csv")
        except ValueError:
            pass
    (out_dir / "config.json").write_bytes(raw)
    print(f"sample: wrote run directory {out_dir}")


def cmd_eval(run_dir: Path, truth_dir: Path, out_path: Path | None = None) -> None:
    truth_x = grids.load_csv(truth_dir / "truth_image.csv")
    truth_t = grids.load_csv(truth_dir / "truth_kernel.csv")
    rows = []
    for label in ("final", "mean"):
        x_path = run_dir / f"{label}_x.csv"
        t_path = run_dir / f"{label}_theta.csv"
        if not x_path.exists() or not t_path.exists():
            raise FileNotFoundError(f"missing run artifact {x_path} or {t_path}")
        est_x = grids.load_csv(x_path)
        est_t = grids.load_csv(t_path)
        mse, mse_aligned = metrics.kernel_error(est_t, truth_t)
        report = metrics.MetricReport(
            psnr_db=metrics.psnr(est_x, truth_x),
            ssim=metrics.ssim(est_x, truth_x),
            kernel_mse=mse,
            kernel_mse_aligned=mse_aligned,
        )
        rows.append((label, report))
    out_path = out_path or (run_dir / "results.csv")
    new = not out_path.exists()
    with open(out_path, "a", newline="") as f:
        wr = csv.writer(f)
        if new:
            wr.writerow(
                ["estimate", "psnr_db", "ssim", "kernel_mse", "kernel_mse_aligned"]
            )
        for label, r in rows:
            wr.writerow([label] + r.csv_row().split(","))
    for label, r in rows:
        print(
            f"eval[{label}]: psnr={r.psnr_db:.3f} dB ssim={r.ssim:.4f} "
            f"kernel_mse={r.kernel_mse:.3e} aligned={r.kernel_mse_aligned:.3e}"
        )


def cmd_oracle(cfg: dict, out_dir: Path) -> bool:
    o = cfg.get("oracle", {})
    problem = default_conjugate_problem(
        rho_x=o["rho_x"], rho_theta=o["rho_theta"], sigma_y=o["sigma_y"]
    )
    factor = o["wrong_rho_factor"] if o.get("negative_control") else 1.0
    result = run_conjugate_check(
        problem=problem,
        iterations=o["iterations"],
        seed=cfg["seed"],
        n_steps=o["n_steps"],
        resolution=o["resolution"],
        oracle_rho_factor=factor,
    )
    threshold = o["tv_threshold"]
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "oracle.csv", "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["marginal", "tv", "threshold", "pass"])
        for name, tv in result.tv.items():
            wr.writerow([name, f"{tv:.6f}", threshold, tv <= threshold])
    for axis, name in enumerate(result.tv):
        result.oracle.export_marginal_csv(axis, out_dir / f"oracle_marginal_{name}.csv")
    ok = all(tv <= threshold for tv in result.tv.values())
    for name, tv in result.tv.items():
        status = "PASS" if tv <= threshold else "FAIL"
        print(f"oracle[{name}]: tv={tv:.4f} threshold={threshold} {status}")
    return ok


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blindgibbs",
        description="Blind deblurring by alternating split-Gibbs sampling",
    )
    parser.add_argument("--config", type=Path, help="JSON config path")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="worker threads for parallelizable stages (currently serial)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="generate a synthetic problem bundle")
    sub.add_parser("sample", help="run the blind sampler on a bundle")
    p_eval = sub.add_parser("eval", help="score a run against ground truth")
    p_eval.add_argument("run_dir", type=Path)
    p_eval.add_argument("truth_dir", type=Path)
    sub.add_parser("oracle", help="conjugate-problem TV verification")

    args = parser.parse_args(argv)

    try:
        if args.command == "eval":
            cmd_eval(args.run_dir, args.truth_dir,
                     args.out / "results.csv" if args.out else None)
            return 0
        if args.config is None:
            parser.error(f"{args.command} requires --config")
        cfg, raw = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
            user = json.loads(raw)
            user["seed"] = args.seed
            raw = json.dumps(user, indent=2).encode()
        out_dir = args.out or Path(cfg.get("output", {}).get("dir", "run_out"))
        if args.command == "simulate":
            cmd_simulate(cfg, raw, out_dir)
        elif args.command == "sample":
            cmd_sample(cfg, raw, out_dir)
        elif args.command == "oracle":
            if not cmd_oracle(cfg, out_dir):
                return 2
        return 0
    except (ConfigError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except BlindGibbsError as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
