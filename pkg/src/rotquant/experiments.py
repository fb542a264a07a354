"""Deterministic experiment runners shared by the CLI and the test suite.

Every runner is a pure function of its arguments: the same inputs produce
byte-identical CSV artifacts.  Trials can fan out over a process pool; rows
are always emitted in trial order regardless of pool size.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .applications import DmeInstance, RdConfig, dme_estimate, rd_quantize
from .errors import ConfigError
from .gain_shape import AratqQuantizer, UniformGainShapeQuantizer, aguq_quantize
from .numerics import SeedBundle
from .optimize import (
    Domain,
    IdentityQuantizer,
    heavy_tailed_oracle,
    noisy_linear_oracle,
    noisy_quadratic_oracle,
    quantized_psgd,
)
from .params import derive_params, make_aratq_config, make_gain_ladder, make_ratq_config
from .ratq import RatqQuantizer, RcsRatqQuantizer, overflow_count, ratq_decode, ratq_encode

CSV_SCHEMA = "# rotquant csv schema v1"

QUANTIZER_NAMES = ("identity", "ratq", "rcs", "aratq", "uniform-gain")
ORACLE_NAMES = ("noisy-linear", "quadratic-bounded", "quadratic-gaussian", "heavy-tailed")


@dataclass
class ExperimentResult:
    """Rows ready for CSV plus the derived summary statistics."""

    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)


def write_csv(path: str, result: ExperimentResult) -> None:
    """Versioned CSV with full-precision floats (repr round-trips exactly)."""
    with open(path, "w", newline="") as f:
        f.write(CSV_SCHEMA + "\n")
        f.write(",".join(result.columns) + "\n")
        for row in result.rows:
            f.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _map_ordered(fn, args_list, workers: int):
    """Apply fn over args, in order; fan out to processes when workers > 1."""
    if workers <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list))


# ---------------------------------------------------------------------------
# Quantizer and oracle factories (string-keyed so trial workers can pickle
# plain parameter dicts instead of closures)


def make_quantizer(name: str, d: int, B: float, seed: SeedBundle,
                   T: int | None = None, r: int | None = None,
                   r_g: int | None = None, gain_range: float | None = None):
    if name == "identity":
        return IdentityQuantizer(B)
    if name == "ratq":
        params = derive_params("ratq-high", d=d, B=B)
        return RatqQuantizer(make_ratq_config(params, seed))
    if name == "rcs":
        if r is None:
            raise ConfigError("quantizer 'rcs' needs the total bit budget r")
        params = derive_params("ratq-low", d=d, B=B, r=r)
        return RcsRatqQuantizer(make_ratq_config(params, seed), params.mu_d)
    if name == "aratq":
        if T is None:
            raise ConfigError("quantizer 'aratq' needs the iteration count T")
        mode = "aratq-low" if r is not None else "aratq-high"
        params = derive_params(mode, d=d, B=B, T=T, r=r, r_g=r_g)
        return AratqQuantizer(make_aratq_config(params, seed))
    if name == "uniform-gain":
        if T is None:
            raise ConfigError("quantizer 'uniform-gain' needs the iteration count T")
        params = derive_params("aratq-high", d=d, B=B, T=T)
        cfg = make_aratq_config(params, seed)
        return UniformGainShapeQuantizer(cfg, gain_range if gain_range is not None else B)
    raise ConfigError(f"unknown quantizer {name!r}; expected one of {QUANTIZER_NAMES}")


def make_oracle(name: str, d: int, D: float, B: float, seed: SeedBundle):
    if name == "noisy-linear":
        return noisy_linear_oracle(d, D, B)
    if name == "quadratic-bounded":
        return noisy_quadratic_oracle(d, D, B, noise="bounded", seed=seed)
    if name == "quadratic-gaussian":
        return noisy_quadratic_oracle(d, D, B, noise="gaussian", seed=seed)
    if name == "heavy-tailed":
        return heavy_tailed_oracle(d, D, B)
    raise ConfigError(f"unknown oracle {name!r}; expected one of {ORACLE_NAMES}")


def gap_bound(quantizer_name: str, d: int, D: float, B: float, T: int,
              r: int | None = None) -> float | None:
    """Closed-form optimality-gap envelope for the averaged PSGD iterate."""
    if quantizer_name == "identity":
        return D * B / math.sqrt(T)
    if quantizer_name == "ratq":
        return math.sqrt(2.0) * D * B / math.sqrt(T)
    if quantizer_name == "rcs":
        params = derive_params("ratq-low", d=d, B=B, r=r)
        mu = params.mu_d / _padded(d)
        return math.sqrt(2.0) * D * B / math.sqrt(mu * T)
    if quantizer_name == "aratq":
        return 3.0 * D * B / math.sqrt(T)
    return None


def _padded(d: int) -> int:
    n = 1
    while n < d:
        n <<= 1
    return n


# ---------------------------------------------------------------------------
# Quantizer round-trip statistics (unbiasedness and second moment)


def run_quantize(d: int, B: float, n_points: int, trials_per_point: int,
                 master_seed: int) -> ExperimentResult:
    """Encode/decode random sphere points many times and collect error moments.

    Pooled per-coordinate errors support the unbiasedness check; the mean
    decoded squared norm supports the second-moment check.
    """
    seed = SeedBundle(master_seed)
    params = derive_params("ratq-high", d=d, B=B)
    cfg = make_ratq_config(params, seed)
    point_rng = seed.stream("trial")

    n_total = n_points * trials_per_point
    err_sum = np.zeros(d)
    err_sqsum = np.zeros(d)
    qn2_sum = 0.0
    qn2_sqsum = 0.0
    overflows = 0
    rows = []
    for p in range(n_points):
        y = point_rng.standard_normal(d)
        y *= B / np.linalg.norm(y)
        p_qn2 = 0.0
        p_mse = 0.0
        for t in range(trials_per_point):
            counter = p * trials_per_point + t
            block = ratq_encode(y, cfg, counter)
            q = ratq_decode(block, cfg, counter)
            overflows += overflow_count(block, cfg)
            e = q - y
            err_sum += e
            err_sqsum += e * e
            qn2 = float(q @ q)
            qn2_sum += qn2
            qn2_sqsum += qn2 * qn2
            p_qn2 += qn2
            p_mse += float(e @ e)
        rows.append((p, trials_per_point,
                     p_qn2 / trials_per_point, p_mse / trials_per_point))

    coord_mean = err_sum / n_total
    coord_var = err_sqsum / n_total - coord_mean**2
    coord_se = np.sqrt(np.maximum(coord_var, 0.0) / n_total)
    qn2_mean = qn2_sum / n_total
    qn2_se = math.sqrt(max(qn2_sqsum / n_total - qn2_mean**2, 0.0) / n_total)
    alpha = RatqQuantizer(cfg).alpha_bound()
    return ExperimentResult(
        columns=("point", "trials", "mean_decoded_sq_norm", "mean_sq_error"),
        rows=rows,
        summary={
            "coord_mean": coord_mean,
            "coord_se": coord_se,
            "mean_decoded_sq_norm": qn2_mean,
            "se_decoded_sq_norm": qn2_se,
            "second_moment_bound": alpha * alpha,
            "overflow_symbols": overflows,
            "bits_per_vector": cfg.bit_len,
        },
    )


# ---------------------------------------------------------------------------
# Quantized PSGD convergence


def _psgd_trial(args: tuple) -> tuple[int, float, int]:
    (quantizer, oracle, d, T, D, B, r, r_g, gain_range, master_seed, trial) = args
    seed = SeedBundle(master_seed).derive(trial)
    orc = make_oracle(oracle, d, D, B, seed)
    q = make_quantizer(quantizer, d, B, seed, T=T, r=r, r_g=r_g, gain_range=gain_range)
    dom = Domain(center=np.zeros(d), radius=D / 2.0)
    trace = quantized_psgd(orc, q, dom, T, seed, record=False)
    return trial, orc.gap(trace.x_bar), q.bits_per_vector


def run_psgd(quantizer: str, oracle: str, d: int, T: int, D: float, B: float,
             n_trials: int, master_seed: int, r: int | None = None,
             r_g: int | None = None, gain_range: float | None = None,
             workers: int = 1) -> ExperimentResult:
    """Independent PSGD trials; the summary compares the mean gap with the
    closed-form envelope for the chosen quantizer."""
    args = [(quantizer, oracle, d, T, D, B, r, r_g, gain_range, master_seed, i)
            for i in range(n_trials)]
    results = _map_ordered(_psgd_trial, args, workers)
    rows = [(trial, gap, bits) for trial, gap, bits in results]
    gaps = np.array([g for _, g, _ in results])
    se = float(np.std(gaps, ddof=1) / math.sqrt(n_trials)) if n_trials > 1 else 0.0
    bound = gap_bound(quantizer, d, D, B, T, r=r)
    return ExperimentResult(
        columns=("trial", "gap", "bits_per_iteration"),
        rows=rows,
        summary={
            "mean_gap": float(gaps.mean()),
            "se_gap": se,
            "gap_bound": bound,
            "bits_per_iteration": rows[0][2] if rows else 0,
            "passes": bool(gaps.mean() + 2.0 * se <= bound) if bound is not None else None,
        },
    )


# ---------------------------------------------------------------------------
# Distributed mean estimation


def _dme_trial(args: tuple) -> tuple[int, float, int]:
    (d, n, master_seed, trial) = args
    master = SeedBundle(master_seed)
    vec_rng = master.stream("trial", n, trial)
    vectors = vec_rng.standard_normal((n, d))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    inst = DmeInstance.from_master_seed(vectors, master, trial)
    res = dme_estimate(inst)
    return trial, res.squared_error, res.bits_per_client


def run_dme(d: int, n_values: tuple[int, ...], n_trials: int, master_seed: int,
            workers: int = 1) -> ExperimentResult:
    """Monte-Carlo mean-estimation error for each client count."""
    rows = []
    summary = {"per_n": {}}
    for n in n_values:
        args = [(d, n, master_seed, i) for i in range(n_trials)]
        results = _map_ordered(_dme_trial, args, workers)
        errs = np.array([e for _, e, _ in results])
        rows.extend((n, trial, err, bits) for trial, err, bits in results)
        se = float(np.std(errs, ddof=1) / math.sqrt(n_trials)) if n_trials > 1 else 0.0
        summary["per_n"][n] = {
            "mse": float(errs.mean()),
            "se": se,
            "bound": 1.0 / n,
            "bits_per_client": results[0][2],
        }
    return ExperimentResult(
        columns=("n", "trial", "mse", "bits_per_client"),
        rows=rows,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# Rate-distortion


def run_rd(v: float, D_target: float, d: int, n_vectors: int, master_seed: int,
           source: str = "gaussian") -> ExperimentResult:
    """Quantize subgaussian vectors and report the exact rate and distortion.

    source="gaussian" draws iid N(0, v) coordinates; source="bounded" draws
    iid uniform coordinates with the same variance (lighter tails).
    """
    if source not in ("gaussian", "bounded"):
        raise ConfigError(f"unknown source {source!r}; expected gaussian or bounded")
    seed = SeedBundle(master_seed)
    cfg = RdConfig(v=v, D_target=D_target, d=d)
    rng = seed.stream("trial")
    half_width = math.sqrt(3.0 * v)
    rows = []
    mses = []
    rate = 0.0
    for i in range(n_vectors):
        if source == "gaussian":
            x = math.sqrt(v) * rng.standard_normal(d)
        else:
            x = rng.uniform(-half_width, half_width, size=d)
        res = rd_quantize(x, cfg, seed, counter=i)
        rate = res.rate_per_dim
        mses.append(res.mse_per_dim)
        rows.append((d, v, D_target, res.rate_per_dim, res.mse_per_dim))
    mses = np.array(mses)
    se = float(np.std(mses, ddof=1) / math.sqrt(n_vectors)) if n_vectors > 1 else 0.0
    return ExperimentResult(
        columns=("d", "v", "D_target", "rate_per_dim", "mse_per_dim"),
        rows=rows,
        summary={
            "rate_per_dim": rate,
            "mse_per_dim": float(mses.mean()),
            "se_mse": se,
            "rate_bound": 0.5 * math.log2(v / D_target) + 6.0,
            "params": cfg.resolve().as_dict(),
        },
    )


# ---------------------------------------------------------------------------
# Adversarial gain experiment


def run_adversarial(d: int, T: int, D: float, B: float, n_trials: int,
                    master_seed: int, delta: float = 0.1,
                    bias_trials: int = 100000, workers: int = 1) -> ExperimentResult:
    """Heavy-tailed oracle whose spikes exceed a fixed uniform gain range.

    Compares the adaptive gain-shape quantizer against the fixed-range foil,
    and Monte-Carlo-checks the adaptive gain quantizer's bias envelope on the
    same spiky gain distribution.
    """
    rows = []
    per_q = {}
    for qname in ("aratq", "uniform-gain"):
        res = run_psgd(qname, "heavy-tailed", d, T, D, B, n_trials, master_seed,
                       workers=workers)
        rows.extend((qname, trial, gap, bits) for trial, gap, bits in res.rows)
        per_q[qname] = res.summary

    # Gain-ladder bias check on the spiky norm distribution.  The sampled
    # gain is B/sqrt(2) almost always and B/(sqrt(2)*delta) with probability
    # delta^2, so its second moment stays below B^2 while the spike escapes
    # any fixed range of order B.
    params = derive_params("aratq-high", d=d, B=B, T=T)
    ladder = make_gain_ladder(params)
    seed = SeedBundle(master_seed)
    gain_rng = seed.stream("oracle-noise", 1)
    round_rng = seed.stream("rounding", 1)
    base = B / math.sqrt(2.0)
    spike = base / delta
    draws = np.where(gain_rng.random(bias_trials) < delta * delta, spike, base)
    errs = np.empty(bias_trials)
    for i, g in enumerate(draws):
        _, val = aguq_quantize(float(g), ladder, params.k_g, round_rng)
        errs[i] = val - g
    bias = float(errs.mean())
    bias_se = float(np.std(errs, ddof=1) / math.sqrt(bias_trials))
    bias_bound = B * B / float(ladder.bounds[-1])

    return ExperimentResult(
        columns=("quantizer", "trial", "gap", "bits_per_iteration"),
        rows=rows,
        summary={
            "aratq": per_q["aratq"],
            "uniform-gain": per_q["uniform-gain"],
            "adaptive_beats_fixed": per_q["aratq"]["mean_gap"]
            < per_q["uniform-gain"]["mean_gap"],
            "gain_bias": bias,
            "gain_bias_se": bias_se,
            "gain_bias_bound": bias_bound,
        },
    )
