"""Command-line interface.

Four subcommands:

* ``simulate``   - Monte Carlo regret of the mixture learner against a Markov
                   ground truth; writes a per-round summary CSV plus a sibling
                   ``key=value`` metadata file.
* ``bounds``     - evaluate the regret/divergence bounds for given quantities
                   or for the built-in lower-bound instance.
* ``impossibility`` - search for witness parameters defeating a candidate
                   high-probability rate and verify them by simulation.
* ``validate``   - run the statistical validation suites and emit one JSON
                   object per suite.

Flag precedence: explicit command-line flags beat ``--config`` file entries,
which beat built-in defaults.  The environment variable ``SEQREGRET_SEED``,
when set, overrides the seed wherever one is used.  Symbols are reported
1-based in human-readable output (state 1 is the padding state); arrays and
files use 0-based indices internally.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, validation
from .errors import InvalidInputError
from .experiments import run_mixture_experiment
from .impossibility import (build_instance, choose_parameters,
                            closed_form_expected_tv, closed_form_joint_kl,
                            verify_witness)
from .markov import MarkovParams, McmcConfig
from .regret import (QUANTILE_LEVELS, RegretSummary, avg_tv_concentration_bound,
                     avg_tv_concentration_bound_kl, expected_regret_bound_kl,
                     expected_regret_bound_tv, highprob_bound_expected_tv,
                     highprob_bound_kl, highprob_bound_realized_tv)

ENV_SEED = "SEQREGRET_SEED"
CSV_HEADER = "t,mean,p05,p25,p50,p75,p95"


def _fmt(x: float) -> str:
    """Floats with 17 significant digits: round-trips float64 exactly."""
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def write_summary_csv(path: Path, summary: RegretSummary) -> None:
    lines = [CSV_HEADER]
    q = summary.quantiles
    for t in range(summary.horizon):
        lines.append(",".join([str(t + 1), _fmt(summary.mean[t])]
                              + [_fmt(q[level][t]) for level in QUANTILE_LEVELS]))
    path.write_text("\n".join(lines) + "\n")


def metadata_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta.txt") if csv_path.suffix == ".csv" \
        else Path(str(csv_path) + ".meta.txt")


def write_metadata(path: Path, entries: dict) -> None:
    lines = [f"{k}={v}" for k, v in entries.items()]
    path.write_text("\n".join(lines) + "\n")


def read_theta_file(path: Path, memory: int, states: int) -> MarkovParams:
    """Transition tensor from text: one context per line, ``states`` numbers.

    Contexts are ordered lexicographically by the context tuple (oldest
    symbol first), matching the row order of the transition tensor.
    """
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != states:
            raise InvalidInputError(f"{path}:{lineno}: expected {states} probabilities, "
                                    f"found {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    expected = states ** memory
    if len(rows) != expected:
        raise InvalidInputError(f"{path}: expected {expected} context rows "
                                f"(states**memory), found {len(rows)}")
    return MarkovParams(memory=memory, states=states, transitions=np.array(rows))


# ---------------------------------------------------------------------------
# Config file and flag precedence
# ---------------------------------------------------------------------------

def read_config_file(path: Path) -> dict:
    """``key=value`` lines; keys match long flag names with ``-`` or ``_``."""
    entries = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidInputError(f"cannot read {value!r} as a boolean")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def resolve_options(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults, config file entries and explicit flags, in that order."""
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        entries = read_config_file(Path(config_path))
        for key, raw in entries.items():
            if key not in defaults:
                raise InvalidInputError(f"unknown config key {key!r}")
            merged[key] = _coerce(raw, defaults[key])
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _env_seed() -> int | None:
    raw = os.environ.get(ENV_SEED)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InvalidInputError(f"{ENV_SEED} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIMULATE_DEFAULTS = {
    "states": 2, "memory": 3, "runs": 100, "horizon": 200, "seed": 0,
    "predictor": "exact", "theta_file": "", "resample_theta": False,
    "workers": 1, "out": "regret_summary.csv",
    "mcmc_chain_length": McmcConfig().chain_length,
    "mcmc_burn_in": McmcConfig().burn_in,
    "mcmc_thinning": McmcConfig().thinning,
    "mcmc_proposal_scale": McmcConfig().proposal_scale,
}


def cmd_simulate(args: argparse.Namespace) -> int:
    opt = resolve_options(args, SIMULATE_DEFAULTS)
    env = _env_seed()
    if env is not None:
        opt["seed"] = env

    theta = None
    theta_source = "sampled"
    if opt["theta_file"]:
        theta = read_theta_file(Path(opt["theta_file"]), opt["memory"], opt["states"])
        theta_source = f"file:{opt['theta_file']}"
    if opt["resample_theta"]:
        theta_source = "resampled-per-run"

    mcmc = McmcConfig(chain_length=opt["mcmc_chain_length"],
                      burn_in=opt["mcmc_burn_in"],
                      thinning=opt["mcmc_thinning"],
                      proposal_scale=opt["mcmc_proposal_scale"],
                      seed=opt["seed"])
    result = run_mixture_experiment(
        memory=opt["memory"], states=opt["states"], horizon=opt["horizon"],
        runs=opt["runs"], base_seed=opt["seed"], predictor=opt["predictor"],
        mcmc=mcmc, theta=theta, resample_theta=opt["resample_theta"],
        workers=opt["workers"])

    csv_path = Path(opt["out"])
    if csv_path.parent and not csv_path.parent.exists():
        csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_summary_csv(csv_path, result.summary)
    meta = {
        "artifact": "seqregret", "version": __version__, "command": "simulate",
        "states": opt["states"], "memory": opt["memory"], "runs": opt["runs"],
        "horizon": opt["horizon"], "base_seed": opt["seed"],
        "predictor": opt["predictor"], "theta_source": theta_source,
        "resample_theta": opt["resample_theta"], "workers": opt["workers"],
        "mcmc_chain_length": opt["mcmc_chain_length"],
        "mcmc_burn_in": opt["mcmc_burn_in"],
        "mcmc_thinning": opt["mcmc_thinning"],
        "mcmc_proposal_scale": _fmt(opt["mcmc_proposal_scale"]),
        "loss": "classification", "quantiles": ",".join(str(q) for q in QUANTILE_LEVELS),
        "rng": "philox(base_seed,episode_index)", "float_format": "%.17g",
        "state_labels": "reported 1-based; arrays 0-based; padding state 1",
        "csv": csv_path.name,
    }
    meta_path = metadata_path(csv_path)
    write_metadata(meta_path, meta)
    print(f"wrote {csv_path} and {meta_path} "
          f"(runs={opt['runs']}, horizon={opt['horizon']}, seed={opt['seed']})")
    return 0


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _print_bound(kind: str, value: float, **inputs) -> None:
    extras = " ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}"
                      for k, v in inputs.items())
    sep = " " if extras else ""
    print(f"{kind}{sep}{extras} value={_fmt(value)}")


def cmd_bounds(args: argparse.Namespace) -> int:
    loss_bound = args.loss_bound
    delta = args.delta
    if args.instance == "impossibility":
        if args.phi is None or args.psi is None or args.horizon is None:
            raise InvalidInputError("--instance impossibility needs --phi, --psi "
                                    "and --horizon")
        build_instance(args.phi, args.psi, args.horizon)  # validates parameters
        horizon = args.horizon
        v_expected = closed_form_expected_tv(args.phi, args.psi, horizon)
        kl = closed_form_joint_kl(args.phi, args.psi, horizon)
        d_expected = kl / horizon
        avg_tv = args.avg_tv
    else:
        horizon = args.horizon
        v_expected = args.v_expected
        kl = args.joint_kl
        d_expected = args.d_expected
        avg_tv = args.avg_tv
        if horizon is None:
            raise InvalidInputError("--horizon is required")

    if v_expected is not None:
        _print_bound("expected-regret-tv", expected_regret_bound_tv(loss_bound, v_expected),
                     v_expected=v_expected)
    if kl is not None:
        _print_bound("expected-regret-kl", expected_regret_bound_kl(loss_bound, horizon, kl),
                     horizon=horizon, kl=kl)
    if delta is not None:
        if avg_tv is not None:
            _print_bound("highprob-realized-tv",
                         highprob_bound_realized_tv(loss_bound, horizon, delta, avg_tv),
                         delta=delta, avg_tv=avg_tv)
        if v_expected is not None:
            _print_bound("highprob-expected-tv",
                         highprob_bound_expected_tv(loss_bound, horizon, delta, v_expected),
                         delta=delta, v_expected=v_expected)
        if kl is not None:
            _print_bound("highprob-kl", highprob_bound_kl(loss_bound, horizon, delta, kl),
                         delta=delta, kl=kl)
        if v_expected is not None:
            _print_bound("avg-tv-concentration",
                         avg_tv_concentration_bound(delta, v_expected),
                         delta=delta, v_expected=v_expected)
        if d_expected is not None:
            _print_bound("avg-tv-concentration-kl",
                         avg_tv_concentration_bound_kl(delta, d_expected),
                         delta=delta, d_expected=d_expected)
    if v_expected is None and kl is None and avg_tv is None:
        raise InvalidInputError("nothing to evaluate: provide divergence quantities "
                                "or --instance impossibility")
    return 0


# ---------------------------------------------------------------------------
# impossibility
# ---------------------------------------------------------------------------

def _remainder_function(form: str, coeff: float, power: float):
    if form == "zero":
        return lambda t, d: 0.0
    if form == "inv-sqrt-horizon":
        return lambda t, d: 1.0 / math.sqrt(t)
    if form == "power":
        return lambda t, d: coeff * t ** (-power)
    raise InvalidInputError(f"unknown remainder form {form!r}")


def cmd_impossibility(args: argparse.Namespace) -> int:
    env = _env_seed()
    seed = env if env is not None else args.seed
    epsilon = _remainder_function(args.remainder, args.remainder_coeff,
                                  args.remainder_power)
    witness = choose_parameters(args.constant, args.alpha, args.beta, epsilon,
                                horizon_cap=args.horizon_cap, n_cap=args.n_cap)
    print(f"n={witness.n}")
    print(f"delta_n={_fmt(witness.delta_n)}")
    print(f"horizon={witness.horizon}")
    print(f"phi={_fmt(witness.delta_n)}")
    print(f"psi={_fmt(0.125)}")
    print(f"r1={_fmt(witness.r1)}")
    print(f"r2={_fmt(witness.r2)}")
    print(f"regret_level={_fmt(witness.regret_level)}")
    if args.episodes > 0:
        ver = verify_witness(witness, episodes=args.episodes, base_seed=seed)
        print(f"exact_probability={_fmt(ver.exact_probability)}")
        print(f"frequency_r1={_fmt(ver.frequency_r1)}")
        print(f"frequency_r2={_fmt(ver.frequency_r2)}")
        print(f"three_sigma={_fmt(ver.three_sigma)}")
        print(f"episodes={ver.episodes}")
        print(f"verified={'yes' if ver.passed else 'no'}")
        return 0 if ver.passed else 1
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

SUITES = ("tensorization", "pinsker", "impossibility", "witness", "coverage",
          "quadrature", "mcmc", "roundtrip", "figure")


def cmd_validate(args: argparse.Namespace) -> int:
    env = _env_seed()
    seed = env if env is not None else args.seed
    chosen = SUITES if args.suite == "all" else (args.suite,)
    all_passed = True
    for name in chosen:
        if name == "tensorization":
            result = validation.tensorization_suite(seed=seed)
        elif name == "pinsker":
            result = validation.pinsker_suite(trials=args.trials, seed=seed)
        elif name == "impossibility":
            result = validation.impossibility_closed_forms_suite()
        elif name == "witness":
            result = validation.witness_suite(episodes=args.episodes, base_seed=seed)
        elif name == "coverage":
            result = validation.coverage_suite(pairs=args.pairs,
                                               episodes=args.episodes, seed=seed)
            result.pop("checks", None)
        elif name == "quadrature":
            result = validation.quadrature_suite(seed=seed)
        elif name == "mcmc":
            result = validation.mcmc_suite(seed=seed)
        elif name == "roundtrip":
            result = validation.roundtrip_suite(seed=seed)
        elif name == "figure":
            result = validation.figure_suite(runs=args.figure_runs,
                                             horizon=args.figure_horizon,
                                             base_seed=seed)
        else:  # pragma: no cover
            raise InvalidInputError(f"unknown suite {name!r}")
        print(json.dumps(result))
        all_passed = all_passed and result["passed"]
    return 0 if all_passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqregret",
        description="Regret of sequential prediction under model mismatch: "
                    "simulation, divergence-based bounds, and a lower-bound witness.")
    parser.add_argument("--version", action="version", version=f"seqregret {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo regret of the mixture learner "
                                          "against a Markov ground truth")
    sim.add_argument("--states", type=int, help="alphabet size S (default 2)")
    sim.add_argument("--memory", type=int, help="Markov memory length m (default 3)")
    sim.add_argument("--runs", type=int, help="number of episodes (default 100)")
    sim.add_argument("--horizon", type=int, help="rounds per episode (default 200)")
    sim.add_argument("--seed", type=int, help="base seed; episode i uses stream "
                                              "(seed, i) (default 0)")
    sim.add_argument("--predictor", choices=["exact", "mcmc"],
                     help="mixture predictive implementation (default exact)")
    sim.add_argument("--theta-file", dest="theta_file",
                     help="ground-truth transition tensor: one context per line, "
                          "S probabilities, contexts in lexicographic order")
    sim.add_argument("--resample-theta", dest="resample_theta", action="store_const",
                     const=True, help="draw a fresh ground truth for every run "
                                      "instead of one shared draw")
    sim.add_argument("--workers", type=int, help="worker threads (default 1); "
                                                 "output is identical for any value")
    sim.add_argument("--out", help="output CSV path (default regret_summary.csv); "
                                   "metadata lands next to it as .meta.txt")
    sim.add_argument("--config", help="key=value file supplying defaults; explicit "
                                      "flags win")
    sim.add_argument("--mcmc-chain-length", dest="mcmc_chain_length", type=int)
    sim.add_argument("--mcmc-burn-in", dest="mcmc_burn_in", type=int)
    sim.add_argument("--mcmc-thinning", dest="mcmc_thinning", type=int)
    sim.add_argument("--mcmc-proposal-scale", dest="mcmc_proposal_scale", type=float)
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bounds", help="evaluate regret/divergence bounds")
    bnd.add_argument("--instance", choices=["impossibility"],
                     help="compute divergence inputs from a built-in instance")
    bnd.add_argument("--phi", type=float, help="instance parameter phi")
    bnd.add_argument("--psi", type=float, help="instance parameter psi")
    bnd.add_argument("--horizon", type=int, help="number of rounds T")
    bnd.add_argument("--delta", type=float, help="failure probability for the "
                                                 "high-probability bounds")
    bnd.add_argument("--loss-bound", dest="loss_bound", type=float, default=1.0,
                     help="loss range L (default 1)")
    bnd.add_argument("--v-expected", dest="v_expected", type=float,
                     help="expected average conditional total variation")
    bnd.add_argument("--joint-kl", dest="joint_kl", type=float,
                     help="KL between the joint sequence laws")
    bnd.add_argument("--d-expected", dest="d_expected", type=float,
                     help="expected average conditional KL")
    bnd.add_argument("--avg-tv", dest="avg_tv", type=float,
                     help="realized average conditional total variation")
    bnd.set_defaults(func=cmd_bounds)

    imp = sub.add_parser("impossibility", help="find and verify witness parameters "
                                               "against a candidate rate")
    imp.add_argument("--constant", type=float, default=1.0, help="rate constant C")
    imp.add_argument("--alpha", type=float, default=0.5,
                     help="delta exponent of the expected-TV rate, in [0, 1)")
    imp.add_argument("--beta", type=float, default=0.25,
                     help="delta exponent of the KL rate, in [0, 1/2)")
    imp.add_argument("--remainder", choices=["zero", "inv-sqrt-horizon", "power"],
                     default="inv-sqrt-horizon", help="vanishing remainder term")
    imp.add_argument("--remainder-coeff", dest="remainder_coeff", type=float,
                     default=1.0, help="coefficient for --remainder power")
    imp.add_argument("--remainder-power", dest="remainder_power", type=float,
                     default=0.5, help="exponent for --remainder power")
    imp.add_argument("--episodes", type=int, default=10 ** 4,
                     help="simulation episodes (0 skips simulation)")
    imp.add_argument("--seed", type=int, default=0)
    imp.add_argument("--horizon-cap", dest="horizon_cap", type=int, default=10 ** 7)
    imp.add_argument("--n-cap", dest="n_cap", type=int, default=10 ** 5)
    imp.set_defaults(func=cmd_impossibility)

    val = sub.add_parser("validate", help="run the statistical validation suites")
    val.add_argument("--suite", choices=("all",) + SUITES, default="all")
    val.add_argument("--trials", type=int, default=10 ** 5,
                     help="random pairs for the pinsker suite")
    val.add_argument("--episodes", type=int, default=10 ** 4,
                     help="episodes for the witness and coverage suites")
    val.add_argument("--pairs", type=int, default=5,
                     help="random process pairs for the coverage suite")
    val.add_argument("--figure-runs", dest="figure_runs", type=int, default=200)
    val.add_argument("--figure-horizon", dest="figure_horizon", type=int, default=1000)
    val.add_argument("--seed", type=int, default=2024)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
