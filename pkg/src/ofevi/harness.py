"""Experiment harness: configured fit pipelines and their evaluation.

A run is a grid of cells (sample-count sweep x basis-order sweep) against one
target.  Each cell fits a squared expansion, evaluates forward KL against
exact target samples and the mean squared score mismatch, and appends a
RunRecord.  Cells share one batch of reference samples, and within a fixed
sample-count cell all basis sizes share one proposal batch and one set of
cached target scores.

Outputs: a long-format CSV (one row per metric) whose bytes depend only on
the config and seed, plus a JSON document carrying complete records
(including wall-clock timings, which are excluded from the CSV so reruns
stay byte-identical) and one JSON per fitted density.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .basis1d import BasisFamily
from .density import OfeDensity
from .estimator import ScoreCache, fit_from_batch
from .exceptions import ConfigError
from .product_basis import ProductBasis
from .proposals import IsotropicGaussian, UniformBox, proposal_density, proposal_sample
from .standardize import estimate_transform, pull_density, push_target
from .targets import TARGET_REGISTRY, make_target

SCHEMA_VERSION = 1

CSV_METRICS = ("lambda_min", "residual", "kl", "kl_se", "fisher_div")
CSV_HEADER = ("config", "target", "family", "orders", "K", "B", "seed", "metric", "value")


@dataclass(frozen=True)
class ExperimentConfig:
    target: str
    orders: tuple[tuple[int, ...], ...]
    seed: int
    family: str = "hermite"
    target_params: dict = field(default_factory=dict)
    samples: tuple[int | None, ...] = (None,)
    proposal: str = "uniform"
    proposal_scale: float = 6.0
    standardize: bool = False
    standardize_samples: int = 10_000
    eval_samples: int = 100_000
    sample_probe: int = 0
    chunk_size: int | None = None
    out_prefix: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(tuple(int(k) for k in o) for o in self.orders))
        object.__setattr__(
            self, "samples", tuple(None if b is None else int(b) for b in self.samples)
        )
        if not self.orders or any(not o or min(o) < 1 for o in self.orders):
            raise ConfigError("orders must be a nonempty list of positive-integer lists")
        if len({len(o) for o in self.orders}) != 1:
            raise ConfigError("every orders entry must have the same dimension")
        if not self.samples or any(b is not None and b < 1 for b in self.samples):
            raise ConfigError("samples must be a nonempty list of positive counts or nulls")
        if self.target not in TARGET_REGISTRY:
            raise ConfigError(f"unknown target {self.target!r}")
        if self.proposal not in ("uniform", "gaussian"):
            raise ConfigError("proposal must be 'uniform' or 'gaussian'")
        if self.proposal_scale <= 0:
            raise ConfigError("proposal_scale must be positive")
        if self.eval_samples < 1:
            raise ConfigError("eval_samples must be positive")
        if not isinstance(self.seed, int):
            raise ConfigError("seed is mandatory and must be an integer")

    @property
    def dim(self) -> int:
        return len(self.orders[0])

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema_version"] = SCHEMA_VERSION
        out["orders"] = [list(o) for o in self.orders]
        out["samples"] = list(self.samples)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        payload = dict(payload)
        version = payload.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema version {version}")
        if "seed" not in payload:
            raise ConfigError("seed is mandatory and must be an integer")
        try:
            return cls(**payload)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(payload, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(payload)

    def hash(self) -> str:
        payload = self.to_dict()
        payload.pop("out_prefix")
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class RunRecord:
    config: str
    target: str
    family: str
    orders: tuple[int, ...]
    K: int
    B: int
    seed: int
    standardize: bool
    lambda_min: float | None = None
    residual: float | None = None
    solver: str | None = None
    kl: float | None = None
    kl_se: float | None = None
    kl_excluded: int | None = None
    fisher_div: float | None = None
    fisher_excluded: int | None = None
    rejected: int | None = None
    tail_clips: int | None = None
    score_ms: float | None = None
    assemble_ms: float | None = None
    eigensolve_ms: float | None = None
    error: str | None = None
    note: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["orders"] = list(self.orders)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        payload = dict(payload)
        payload["orders"] = tuple(payload["orders"])
        return cls(**payload)


# ---------------------------------------------------------------------------
# Metrics.

def forward_kl(target, q, n: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of KL(p || q) from n exact target samples."""
    if n < 1:
        raise ValueError("forward KL needs at least one sample")
    z = target.sample(rng, int(n))
    kl, se, _ = kl_from_samples(z, np.asarray(target.log_density(z)), q)
    return kl, se


def kl_from_samples(z: np.ndarray, log_p: np.ndarray, q) -> tuple[float, float, int]:
    """KL(p || q) from precomputed target samples and log densities.

    Points where q vanishes contribute +inf to the true KL; they are
    excluded from the average, counted, and reported with a warning.
    """
    diff = log_p - np.asarray(q.log_density(z))
    keep = np.isfinite(diff)
    excluded = int(diff.size - np.count_nonzero(keep))
    if excluded:
        warnings.warn(
            f"{excluded} of {diff.size} reference points hit zeros of q; excluded from KL",
            stacklevel=2,
        )
    if not np.any(keep):
        return float("nan"), float("nan"), excluded
    diff = diff[keep]
    se = float(np.std(diff, ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else float("nan")
    return float(np.mean(diff)), se, excluded


def fisher_divergence_empirical(target, q, reference_samples) -> float:
    """Mean squared score mismatch over reference samples.

    (1/S) sum_s ||grad log p(z_s) - grad log q(z_s)||^2; samples at poles of
    q are excluded with a warning.
    """
    value, _ = _fisher_from_scores(
        np.asarray(target.score(reference_samples)), q, reference_samples
    )
    return value


def _fisher_from_scores(p_scores: np.ndarray, q, z: np.ndarray) -> tuple[float, int]:
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[0] == 0:
        raise ValueError("reference samples must be a nonempty (n, dim) array")
    f = np.asarray(q.expansion(z))
    keep = f != 0.0
    excluded = int(z.shape[0] - np.count_nonzero(keep))
    if excluded:
        warnings.warn(
            f"{excluded} of {z.shape[0]} reference points are poles of q; excluded",
            stacklevel=2,
        )
        z, p_scores = z[keep], p_scores[keep]
    gap = p_scores - q.score(z)
    return float(np.mean(np.sum(gap * gap, axis=1))), excluded


# ---------------------------------------------------------------------------
# Running experiments.

def _build_proposal(config: ExperimentConfig, dim: int):
    if config.proposal == "uniform":
        return UniformBox.centered(config.proposal_scale, dim)
    return IsotropicGaussian(np.zeros(dim), config.proposal_scale**2)


def run(config: ExperimentConfig):
    """Execute every sweep cell; returns (records, densities) in cell order.

    A cell failure is recorded with its reason and the run continues.
    Randomness is drawn from per-purpose streams keyed by the seed, so a
    rerun with the same config reproduces every number except wall-clock
    timings.
    """
    target = make_target(config.target, **config.target_params)
    if target.dim != config.dim:
        raise ConfigError(
            f"target {config.target!r} has dimension {target.dim}, orders imply {config.dim}"
        )
    proposal = _build_proposal(config, target.dim)
    config_hash = config.hash()

    if config.standardize:
        transform = estimate_transform(
            target, proposal, config.standardize_samples, np.random.default_rng((config.seed, 2))
        )
        fit_target = push_target(target, transform)
    else:
        transform = None
        fit_target = target

    rng_eval = np.random.default_rng((config.seed, 3))
    z_ref = target.sample(rng_eval, config.eval_samples)
    log_p_ref = np.asarray(target.log_density(z_ref))
    p_scores_ref = np.asarray(target.score(z_ref))

    records: list[RunRecord] = []
    densities: list[OfeDensity | None] = []
    for bi, b_spec in enumerate(config.samples):
        cache = ScoreCache(fit_target)
        shared = None
        if b_spec is not None:
            rng_fit = np.random.default_rng((config.seed, 1, bi))
            z = proposal_sample(proposal, rng_fit, b_spec)
            shared = (z, 1.0 / proposal_density(proposal, z))
        for ki, orders in enumerate(config.orders):
            size = int(np.prod(orders))
            base = RunRecord(
                config=config_hash,
                target=config.target,
                family=config.family,
                orders=orders,
                K=size,
                B=b_spec if b_spec is not None else 10 * size,
                seed=config.seed,
                standardize=config.standardize,
            )
            try:
                basis = ProductBasis([BasisFamily(config.family)] * len(orders), orders)
                record, density = _run_cell(
                    config, base, basis, cache, proposal, shared, transform,
                    z_ref, log_p_ref, p_scores_ref, bi, ki,
                )
            except Exception as exc:  # per-cell isolation: record and move on
                record, density = replace(base, error=f"{type(exc).__name__}: {exc}"), None
            records.append(record)
            densities.append(density)
    return records, densities


def _run_cell(config, base, basis, cache, proposal, shared, transform,
              z_ref, log_p_ref, p_scores_ref, bi, ki):
    if shared is None:
        rng_fit = np.random.default_rng((config.seed, 1, bi, ki))
        z = proposal_sample(proposal, rng_fit, base.B)
        weights = 1.0 / proposal_density(proposal, z)
    else:
        z, weights = shared
    result = fit_from_batch(cache, basis, z, weights, chunk_size=config.chunk_size)
    q = result.density if transform is None else pull_density(result.density, transform)

    kl, kl_se, kl_excluded = kl_from_samples(z_ref, log_p_ref, q)
    fisher, fisher_excluded = _fisher_from_scores(p_scores_ref, q, z_ref)

    tail_clips, note = None, ""
    if config.sample_probe > 0:
        rng_probe = np.random.default_rng((config.seed, 4, bi, ki))
        _, info = q.sample_with_info(rng_probe, config.sample_probe)
        tail_clips = int(np.sum(info["boundary_clamps"]))
    else:
        note = "tail_clips null: no sampling probe requested"

    record = replace(
        base,
        lambda_min=result.eigenvalue,
        residual=result.residual,
        solver=result.solver,
        kl=kl,
        kl_se=kl_se,
        kl_excluded=kl_excluded,
        fisher_div=fisher,
        fisher_excluded=fisher_excluded,
        rejected=result.rejected,
        tail_clips=tail_clips,
        score_ms=result.timings_ms["score_eval"],
        assemble_ms=result.timings_ms["assemble"],
        eigensolve_ms=result.timings_ms["eigensolve"],
        note=note,
    )
    return record, q


# ---------------------------------------------------------------------------
# Serialization.

def records_to_csv(records: list[RunRecord]) -> str:
    """Long-format metric rows; deterministic bytes for a given config+seed.

    Wall-clock timings are deliberately not CSV metrics: they vary across
    reruns and would break byte-for-byte reproducibility.  They live in the
    JSON records instead.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        prefix = (
            r.config, r.target, r.family, "x".join(str(k) for k in r.orders),
            r.K, r.B, r.seed,
        )
        for metric in CSV_METRICS:
            value = getattr(r, metric)
            writer.writerow(prefix + (metric, "" if value is None else repr(value)))
    return buf.getvalue()


def records_to_json(records: list[RunRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"


def records_from_json(text: str) -> list[RunRecord]:
    return [RunRecord.from_dict(p) for p in json.loads(text)]


def write_outputs(config: ExperimentConfig, records, densities) -> list[Path]:
    if config.out_prefix is None:
        raise ConfigError("config has no out_prefix")
    prefix = Path(config.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = prefix.with_name(prefix.name + "_metrics.csv")
    csv_path.write_text(records_to_csv(records))
    written.append(csv_path)
    json_path = prefix.with_name(prefix.name + "_records.json")
    json_path.write_text(records_to_json(records))
    written.append(json_path)
    for record, density in zip(records, densities):
        if density is None:
            continue
        name = f"{prefix.name}_density_K{record.K}_B{record.B}.json"
        path = prefix.with_name(name)
        density.save(path)
        written.append(path)
    return written
