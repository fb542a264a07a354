"""Quantized projected SGD over Euclidean balls, plus the stochastic
subgradient oracle suite used by the convergence experiments."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import SeedBundle


@dataclass(frozen=True)
class Domain:
    """Euclidean ball with the given center and radius (diameter D = 2*radius)."""

    center: np.ndarray
    radius: float

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


def project(x: np.ndarray, dom: Domain) -> np.ndarray:
    """Euclidean projection onto the ball; idempotent and 1-Lipschitz."""
    delta = np.asarray(x, dtype=np.float64) - dom.center
    norm = float(np.linalg.norm(delta))
    if norm <= dom.radius:
        return dom.center + delta
    return dom.center + delta * (dom.radius / norm)


@dataclass
class OracleSpec:
    """Convex objective with a randomized subgradient source.

    regime is "almost-sure" (every sample has norm <= B) or "mean-square"
    (only the expected squared norm is bounded by B^2).
    """

    name: str
    objective: "callable"
    subgradient: "callable"  # (x, rng) -> vector
    regime: str
    B: float
    minimizer: np.ndarray
    optimum: float

    def gap(self, x: np.ndarray) -> float:
        return float(self.objective(x) - self.optimum)


@dataclass
class RunTrace:
    """Per-iteration record of one optimizer run."""

    t: np.ndarray
    f_value: np.ndarray
    bits_sent: np.ndarray
    x_bar: np.ndarray
    gap: float
    extras: dict = field(default_factory=dict)


class IdentityQuantizer:
    """Pass-through quantizer: infinite-precision baseline."""

    bits_per_vector = 0

    def __init__(self, B: float):
        self.B = B

    def alpha_bound(self) -> float:
        return self.B

    def __call__(self, y: np.ndarray, counter: int = 0) -> np.ndarray:
        return y


def quantized_psgd(
    oracle: OracleSpec,
    quantizer,
    dom: Domain,
    T: int,
    seed: SeedBundle,
    eta: float | None = None,
    x0: np.ndarray | None = None,
    record: bool = True,
) -> RunTrace:
    """Projected SGD on quantized subgradients, returning the averaged iterate.

    The default step size is D / (alpha * sqrt(T)) with alpha taken from the
    quantizer's closed-form second-moment bound.
    """
    if oracle.regime == "mean-square" and getattr(quantizer, "almost_sure_only", False):
        warnings.warn(
            f"quantizer {type(quantizer).__name__} assumes almost-surely bounded "
            "inputs but the oracle is only mean-square bounded",
            stacklevel=2,
        )
    if eta is None:
        eta = dom.diameter / (quantizer.alpha_bound() * math.sqrt(T))
    if eta <= 0:
        raise ValueError(f"step size must be positive, got {eta}")
    rng = seed.stream("oracle-noise")
    x = dom.center.copy() if x0 is None else project(np.asarray(x0, float), dom)
    running_sum = np.zeros_like(x)
    ts, fs, bits = [], [], []
    for t in range(T):
        g_hat = oracle.subgradient(x, rng)
        q = quantizer(g_hat, t)
        x = project(x - eta * q, dom)
        running_sum += x
        if record:
            ts.append(t + 1)
            fs.append(float(oracle.objective(x)))
            bits.append(quantizer.bits_per_vector)
    x_bar = running_sum / T
    return RunTrace(
        t=np.array(ts, dtype=np.int64),
        f_value=np.array(fs),
        bits_sent=np.array(bits, dtype=np.int64),
        x_bar=x_bar,
        gap=oracle.gap(x_bar),
    )


@dataclass
class TrialSummary:
    gaps: np.ndarray
    bits_per_iteration: int
    bound: float | None = None

    @property
    def mean_gap(self) -> float:
        return float(np.mean(self.gaps))

    @property
    def stderr(self) -> float:
        n = self.gaps.size
        return float(np.std(self.gaps, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def passes(self) -> bool | None:
        if self.bound is None:
            return None
        return self.mean_gap + 2.0 * self.stderr <= self.bound


def run_trials(
    oracle_factory,
    quantizer_factory,
    dom: Domain,
    T: int,
    n_trials: int,
    seed: SeedBundle,
    bound: float | None = None,
) -> tuple[TrialSummary, list[RunTrace]]:
    """Independent optimizer trials with per-trial derived seeds; results are
    ordered by trial index so aggregation is deterministic."""
    traces = []
    for trial in range(n_trials):
        trial_seed = seed.derive(trial)
        oracle = oracle_factory(trial_seed)
        quantizer = quantizer_factory(trial_seed)
        traces.append(quantized_psgd(oracle, quantizer, dom, T, trial_seed))
    gaps = np.array([tr.gap for tr in traces])
    bits = traces[0].bits_sent[0] if traces and traces[0].bits_sent.size else 0
    return TrialSummary(gaps=gaps, bits_per_iteration=int(bits), bound=bound), traces


def write_trace_csv(path: str, traces: list[RunTrace], optimum: float | None = None) -> None:
    """CSV columns: trial, t, f_gap, bits (schema v1)."""
    with open(path, "w", newline="") as f:
        f.write("# rotquant trace schema v1\n")
        writer = csv.writer(f)
        writer.writerow(["trial", "t", "f_gap", "bits"])
        for trial, tr in enumerate(traces):
            base = optimum if optimum is not None else 0.0
            for t, fv, b in zip(tr.t, tr.f_value, tr.bits_sent):
                writer.writerow([trial, int(t), repr(float(fv) - base), int(b)])


# ---------------------------------------------------------------------------
# Oracle suite


def noisy_linear_oracle(d: int, D: float, B: float, signal: float = 0.8) -> OracleSpec:
    """Linear objective with coordinate-wise Rademacher subgradient noise.

    Each sampled coordinate is +-B/sqrt(d), biased so the mean is the true
    gradient; the sample norm is exactly B, so the oracle is almost surely
    bounded.  ``signal`` in (0, 1] scales the gradient relative to B.
    """
    if not 0 < signal <= 1:
        raise ValueError(f"signal must be in (0, 1], got {signal}")
    scale = B / math.sqrt(d)
    c = np.full(d, signal * scale)
    x_star = -(D / 2.0) * c / np.linalg.norm(c)

    def objective(x):
        return float(c @ x)

    def subgradient(x, rng):
        p_up = 0.5 * (1.0 + c / scale)
        return scale * (2.0 * (rng.random(d) < p_up) - 1.0)

    return OracleSpec(
        name="noisy-linear",
        objective=objective,
        subgradient=subgradient,
        regime="almost-sure",
        B=B,
        minimizer=x_star,
        optimum=float(c @ x_star),
    )


def noisy_quadratic_oracle(
    d: int,
    D: float,
    B: float,
    noise: str = "bounded",
    seed: SeedBundle | None = None,
) -> OracleSpec:
    """Ball-constrained quadratic with additive noise on the gradient.

    noise="bounded" draws noise uniformly in a ball of radius B/2 (almost
    surely bounded overall); noise="gaussian" uses centered Gaussian noise
    (mean-square bounded only).
    """
    curvature = B / (2.0 * D)
    rng0 = (seed or SeedBundle(0)).stream("oracle-noise", 999)
    direction = rng0.standard_normal(d)
    x_star = (D / 4.0) * direction / np.linalg.norm(direction)

    def objective(x):
        return 0.5 * curvature * float(np.sum((x - x_star) ** 2))

    def bounded_noise(rng):
        z = rng.standard_normal(d)
        radius = (B / 2.0) * rng.random() ** (1.0 / d)
        return z * (radius / np.linalg.norm(z))

    def subgradient(x, rng):
        grad = curvature * (x - x_star)
        if noise == "bounded":
            return grad + bounded_noise(rng)
        sigma = B / (2.0 * math.sqrt(d))
        return grad + sigma * rng.standard_normal(d)

    return OracleSpec(
        name=f"quadratic-{noise}",
        objective=objective,
        subgradient=subgradient,
        regime="almost-sure" if noise == "bounded" else "mean-square",
        B=B,
        minimizer=x_star,
        optimum=0.0,
    )


def heavy_tailed_oracle(
    d: int,
    D: float,
    B: float,
    alpha: int = 1,
    delta: float = 0.1,
    y_exp: float = 1.0,
) -> OracleSpec:
    """Three-point heavy-tailed oracle: mean-square bounded but with rare
    spikes of magnitude B / (sqrt(2) * delta^y) along the first coordinate.

    Sampled values are +-(B/sqrt(2)) e1, each with probability
    (1 - delta^(1+y))/2, and (alpha*B/(sqrt(2)*delta^y)) e1 with probability
    delta^(1+y).  The mean is alpha*delta*B/sqrt(2) e1, which is the interior
    gradient of the matching objective |x(1) + alpha*D/2| scaled by
    delta*B/sqrt(2); its constrained minimizer is -alpha*(D/2) e1.
    """
    if alpha not in (-1, 1):
        raise ValueError(f"alpha must be +-1, got {alpha}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 0 <= y_exp <= 1:
        raise ValueError(f"y_exp must be in [0, 1], got {y_exp}")
    base = B / math.sqrt(2.0)
    p_spike = delta ** (1.0 + y_exp)
    spike = alpha * base / (delta ** y_exp)

    def objective(x):
        return delta * base * abs(float(x[0]) + alpha * D / 2.0)

    def subgradient(x, rng):
        u = rng.random()
        g = np.zeros(d)
        if u < p_spike:
            g[0] = spike
        elif u < p_spike + (1.0 - p_spike) / 2.0:
            g[0] = base
        else:
            g[0] = -base
        return g

    return OracleSpec(
        name="heavy-tailed",
        objective=objective,
        subgradient=subgradient,
        regime="mean-square",
        B=B,
        minimizer=-alpha * (D / 2.0) * np.eye(1, d, 0)[0],
        optimum=0.0,
    )


def make_test_oracles(d: int, D: float, B: float, seed: SeedBundle | None = None) -> dict:
    """The standard oracle suite used by convergence tests and experiments."""
    return {
        "noisy-linear": noisy_linear_oracle(d, D, B),
        "quadratic-bounded": noisy_quadratic_oracle(d, D, B, noise="bounded", seed=seed),
        "quadratic-gaussian": noisy_quadratic_oracle(d, D, B, noise="gaussian", seed=seed),
        "heavy-tailed": heavy_tailed_oracle(d, D, B),
    }
