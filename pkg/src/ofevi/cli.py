"""Command-line interface.

Subcommands: fit, sample, moments, evaluate, sweep.  Exit codes: 0 on
success, 1 for configuration problems (bad flags, unreadable files, invalid
config), 2 for runtime failures (including a sweep in which every cell
failed).  Seeds come from flags or the config file only.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .basis1d import BasisFamily
from .density import OfeDensity
from .estimator import fit
from .exceptions import ConfigError
from .harness import ExperimentConfig, fisher_divergence_empirical, forward_kl, run, write_outputs
from .product_basis import ProductBasis
from .proposals import IsotropicGaussian, UniformBox
from .standardize import estimate_transform, pull_density, push_target
from .targets import TARGET_REGISTRY, make_target


def _parse_orders(text: str) -> tuple[int, ...]:
    try:
        orders = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"orders must be comma-separated integers, got {text!r}") from None
    if not orders or min(orders) < 1:
        raise ConfigError("orders must be positive")
    return orders


def _parse_params(text: str) -> dict:
    try:
        params = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"target params are not valid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise ConfigError("target params must be a JSON object")
    return params


def _load_target(name: str, params_text: str):
    if name not in TARGET_REGISTRY:
        raise ConfigError(f"unknown target {name!r}; known: {sorted(TARGET_REGISTRY)}")
    return make_target(name, **_parse_params(params_text))


def _load_density(path: str) -> OfeDensity:
    try:
        return OfeDensity.load(path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot load density from {path}: {exc}") from None


def _build_proposal(kind: str, scale: float, dim: int):
    if scale <= 0:
        raise ConfigError("proposal scale must be positive")
    if kind == "uniform":
        return UniformBox.centered(scale, dim)
    if kind == "gaussian":
        return IsotropicGaussian(np.zeros(dim), scale**2)
    raise ConfigError(f"unknown proposal kind {kind!r}")


def _cmd_fit(args) -> int:
    target = _load_target(args.target, args.target_params)
    orders = _parse_orders(args.orders)
    if len(orders) != target.dim:
        raise ConfigError(f"orders imply dimension {len(orders)}, target has {target.dim}")
    basis = ProductBasis([BasisFamily(args.family)] * len(orders), orders)
    proposal = _build_proposal(args.proposal, args.scale, target.dim)
    rng = np.random.default_rng(args.seed)

    transform = None
    fit_target = target
    if args.standardize:
        transform = estimate_transform(target, proposal, args.standardize_samples, rng)
        fit_target = push_target(target, transform)
    result = fit(fit_target, basis, proposal, rng, n_samples=args.samples)
    q = result.density if transform is None else pull_density(result.density, transform)
    if args.out:
        q.save(args.out)
    summary = {
        "lambda_min": result.eigenvalue,
        "residual": result.residual,
        "solver": result.solver,
        "K": basis.size,
        "B": int(result.samples.shape[0] + result.rejected),
        "rejected": result.rejected,
        "standardized": args.standardize,
        "density_path": args.out,
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_sample(args) -> int:
    q = _load_density(args.density)
    rng = np.random.default_rng(args.seed)
    samples, info = q.sample_with_info(rng, args.n)
    lines = [",".join(f"z{d + 1}" for d in range(q.dim))]
    lines += [",".join(repr(float(v)) for v in row) for row in samples]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    clamps = info["boundary_clamps"].tolist()
    print(f"boundary clamps per dimension: {clamps}", file=sys.stderr)
    return 0


def _cmd_moments(args) -> int:
    q = _load_density(args.density)
    mean, cov = q.mean_and_cov()
    print(json.dumps({"mean": mean.tolist(), "cov": cov.tolist()}, indent=2))
    return 0


def _cmd_evaluate(args) -> int:
    q = _load_density(args.density)
    target = _load_target(args.target, args.target_params)
    if target.dim != q.dim:
        raise ConfigError(f"density has dimension {q.dim}, target has {target.dim}")
    rng = np.random.default_rng(args.seed)
    kl, se = forward_kl(target, q, args.n, rng)
    z_ref = target.sample(rng, args.n)
    fisher = fisher_divergence_empirical(target, q, z_ref)
    print(json.dumps({"kl": kl, "kl_se": se, "fisher_div": fisher, "n": args.n}, indent=2))
    return 0


def _cmd_sweep(args) -> int:
    try:
        text = open(args.config).read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    config = ExperimentConfig.from_json(text)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out_prefix is not None:
        config = replace(config, out_prefix=args.out_prefix)
    records, densities = run(config)
    for record in records:
        label = f"K={record.K} B={record.B}"
        if record.error is not None:
            print(f"{label}: FAILED ({record.error})")
        else:
            print(f"{label}: lambda_min={record.lambda_min:.6e} kl={record.kl:.6f}")
    if config.out_prefix is not None:
        for path in write_outputs(config, records, densities):
            print(f"wrote {path}")
    if all(record.error is not None for record in records):
        print("every sweep cell failed", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofevi",
        description="Fit, sample, and evaluate squared orthogonal-expansion densities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a density to a named target")
    p_fit.add_argument("--target", required=True)
    p_fit.add_argument("--target-params", default="{}", help="JSON object of constructor args")
    p_fit.add_argument("--orders", required=True, help="comma-separated per-dimension orders")
    p_fit.add_argument("--family", default="hermite")
    p_fit.add_argument("--proposal", default="uniform", choices=("uniform", "gaussian"))
    p_fit.add_argument("--scale", type=float, default=6.0, help="box halfwidth or Gaussian sd")
    p_fit.add_argument("--samples", type=int, default=None,
                       help="batch size (default: ten draws per basis function)")
    p_fit.add_argument("--standardize", action="store_true")
    p_fit.add_argument("--standardize-samples", type=int, default=10_000)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", default=None, help="path for the fitted density JSON")
    p_fit.set_defaults(func=_cmd_fit)

    p_sample = sub.add_parser("sample", help="draw exact samples from a saved density")
    p_sample.add_argument("--density", required=True)
    p_sample.add_argument("--n", type=int, default=1000)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", default=None, help="CSV path (default stdout)")
    p_sample.set_defaults(func=_cmd_sample)

    p_moments = sub.add_parser("moments", help="mean and covariance of a saved density")
    p_moments.add_argument("--density", required=True)
    p_moments.set_defaults(func=_cmd_moments)

    p_eval = sub.add_parser("evaluate", help="forward KL and score mismatch against a target")
    p_eval.add_argument("--density", required=True)
    p_eval.add_argument("--target", required=True)
    p_eval.add_argument("--target-params", default="{}")
    p_eval.add_argument("--n", type=int, default=100_000)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="run a configured sweep and write outputs")
    p_sweep.add_argument("--config", required=True, help="experiment config JSON")
    p_sweep.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sweep.add_argument("--out-prefix", default=None, help="override the config output prefix")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
