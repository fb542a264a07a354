"""Command-line harness: run experiments from YAML configs, resolve regime
parameters, and validate configs without running them.

Exit status: 0 on success, 1 when a bound assertion requested by the config
fails, 2 on a malformed config.

Config template (one experiment per file)::

    experiment: psgd        # quantize | psgd | dme | rd | adversarial
    seed: 42                # master seed; --seed-override replaces it
    out: results/psgd.csv   # CSV artifact path; --out replaces it
    assert_bounds: true     # optional; nonzero exit if a bound check fails
    params:                 # experiment-specific, see configs/*.yaml
      quantizer: ratq
      oracle: noisy-linear
      d: 128
      T: 1024
      D: 1.0
      B: 1.0
      trials: 20

The default worker count comes from ROTQUANT_WORKERS (else 1); --workers
overrides it.  Identical configs produce byte-identical CSVs at any worker
count because rows are ordered by trial index.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import yaml

from . import experiments
from .errors import ConfigError
from .params import MODES, derive_params

WORKERS_ENV = "ROTQUANT_WORKERS"

EXPERIMENT_KINDS = ("quantize", "psgd", "dme", "rd", "adversarial")

# Required and optional parameter names per experiment kind.
_PARAM_SPECS = {
    "quantize": ({"d", "points", "trials"}, {"B"}),
    "psgd": ({"quantizer", "oracle", "d", "T", "trials"},
             {"D", "B", "r", "r_g", "gain_range"}),
    "dme": ({"d", "n_values", "trials"}, set()),
    "rd": ({"v", "D_target", "d", "vectors"}, {"source"}),
    "adversarial": ({"d", "T", "trials"}, {"D", "B", "delta", "bias_trials"}),
}


class ConfigFileError(Exception):
    """Malformed config; message carries the field or line diagnostic."""


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            cfg = yaml.safe_load(f)
    except OSError as e:
        raise ConfigFileError(f"cannot read config: {e}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigFileError(f"invalid YAML{where}: {getattr(e, 'problem', e)}") from e
    if not isinstance(cfg, dict):
        raise ConfigFileError("config root must be a mapping")
    return validate_config(cfg)


def validate_config(cfg: dict) -> dict:
    for key in ("experiment", "seed", "out"):
        if key not in cfg:
            raise ConfigFileError(f"missing required field '{key}'")
    kind = cfg["experiment"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigFileError(
            f"field 'experiment': unknown kind {kind!r}; expected one of {EXPERIMENT_KINDS}"
        )
    if not isinstance(cfg["seed"], int):
        raise ConfigFileError(f"field 'seed': expected integer, got {cfg['seed']!r}")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigFileError("field 'params': expected a mapping")
    required, optional = _PARAM_SPECS[kind]
    missing = required - set(params)
    if missing:
        raise ConfigFileError(
            f"field 'params': missing {sorted(missing)} for experiment '{kind}'"
        )
    unknown = set(params) - required - optional
    if unknown:
        raise ConfigFileError(
            f"field 'params': unknown keys {sorted(unknown)} for experiment '{kind}'"
        )
    return cfg


def run_experiment(cfg: dict, workers: int) -> experiments.ExperimentResult:
    kind = cfg["experiment"]
    seed = cfg["seed"]
    p = cfg.get("params", {})
    if kind == "quantize":
        return experiments.run_quantize(
            d=p["d"], B=p.get("B", 1.0), n_points=p["points"],
            trials_per_point=p["trials"], master_seed=seed,
        )
    if kind == "psgd":
        return experiments.run_psgd(
            quantizer=p["quantizer"], oracle=p["oracle"], d=p["d"], T=p["T"],
            D=p.get("D", 1.0), B=p.get("B", 1.0), n_trials=p["trials"],
            master_seed=seed, r=p.get("r"), r_g=p.get("r_g"),
            gain_range=p.get("gain_range"), workers=workers,
        )
    if kind == "dme":
        return experiments.run_dme(
            d=p["d"], n_values=tuple(p["n_values"]), n_trials=p["trials"],
            master_seed=seed, workers=workers,
        )
    if kind == "rd":
        return experiments.run_rd(
            v=p["v"], D_target=p["D_target"], d=p["d"], n_vectors=p["vectors"],
            master_seed=seed, source=p.get("source", "gaussian"),
        )
    # kind == "adversarial"
    return experiments.run_adversarial(
        d=p["d"], T=p["T"], D=p.get("D", 1.0), B=p.get("B", 1.0),
        n_trials=p["trials"], master_seed=seed, delta=p.get("delta", 0.1),
        bias_trials=p.get("bias_trials", 100000), workers=workers,
    )


def _bounds_hold(kind: str, summary: dict) -> bool:
    if kind == "quantize":
        return (summary["overflow_symbols"] == 0
                and summary["mean_decoded_sq_norm"]
                <= summary["second_moment_bound"] + 3.0 * summary["se_decoded_sq_norm"])
    if kind == "psgd":
        return summary["passes"] is not False
    if kind == "dme":
        return all(st["mse"] <= st["bound"] + 3.0 * st["se"]
                   for st in summary["per_n"].values())
    if kind == "rd":
        return (summary["rate_per_dim"] <= summary["rate_bound"]
                and summary["mse_per_dim"]
                <= summary["params"]["D_target"] + 3.0 * summary["se_mse"])
    return (summary["adaptive_beats_fixed"]
            and abs(summary["gain_bias"])
            <= summary["gain_bias_bound"] + 3.0 * summary["gain_bias_se"])


def _summary_json(summary: dict) -> str:
    def default(o):
        try:
            return o.tolist()
        except AttributeError:
            return str(o)

    return json.dumps(summary, indent=2, sort_keys=True, default=default)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigFileError as e:
        print(f"error: {args.config}: {e}", file=sys.stderr)
        return 2
    if args.seed_override is not None:
        cfg["seed"] = args.seed_override
    out = args.out or cfg["out"]
    out_dir = os.path.dirname(out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    try:
        result = run_experiment(cfg, workers=args.workers)
    except ConfigError as e:
        print(f"error: {args.config}: {e}", file=sys.stderr)
        return 2
    experiments.write_csv(out, result)
    with open(out + ".summary.json", "w") as f:
        f.write(_summary_json(result.summary) + "\n")
    print(f"wrote {out} and {out}.summary.json")
    print(_summary_json(result.summary))
    if cfg.get("assert_bounds") and not _bounds_hold(cfg["experiment"], result.summary):
        print("bound assertion failed", file=sys.stderr)
        return 1
    return 0


def cmd_derive_params(args) -> int:
    try:
        params = derive_params(
            args.mode, d=args.d, B=args.B, T=args.T, r=args.r, r_g=args.r_g,
            v=args.v, D_target=args.D_target,
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(json.dumps(params.as_dict(), indent=2, sort_keys=True))
    return 0


def cmd_validate_config(args) -> int:
    try:
        load_config(args.config)
    except ConfigFileError as e:
        print(f"error: {args.config}: {e}", file=sys.stderr)
        return 2
    print(f"{args.config}: ok")
    return 0


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotquant", description="Gradient-compression experiment harness."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a YAML config")
    p_run.add_argument("--config", required=True, help="YAML experiment config")
    p_run.add_argument("--out", help="override the config's CSV output path")
    p_run.add_argument("--workers", type=int, default=_default_workers(),
                       help=f"trial worker pool size (default ${WORKERS_ENV} or 1)")
    p_run.add_argument("--seed-override", type=int, default=None,
                       help="replace the config's master seed")
    p_run.set_defaults(func=cmd_run)

    p_dp = sub.add_parser("derive-params",
                          help="resolve every derived constant for a regime")
    p_dp.add_argument("--mode", required=True, choices=MODES)
    p_dp.add_argument("--d", type=int, required=True)
    p_dp.add_argument("--B", type=float, default=1.0)
    p_dp.add_argument("--T", type=int, default=None)
    p_dp.add_argument("--r", type=int, default=None)
    p_dp.add_argument("--r-g", type=int, default=None, dest="r_g")
    p_dp.add_argument("--v", type=float, default=None)
    p_dp.add_argument("--D-target", type=float, default=None, dest="D_target")
    p_dp.set_defaults(func=cmd_derive_params)

    p_val = sub.add_parser("validate-config", help="check a config without running")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
