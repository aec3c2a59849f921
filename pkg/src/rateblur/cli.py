"""Command-line surface: reproducible experiment runs with JSON/CSV output.

Commands: synth, validate, compare, simulate (1..7), leaderboard. Every
command is deterministic given --seed; with --no-timestamp the outputs
are byte-identical across reruns and across --threads values. Every
flag's default can also be supplied through an environment variable
named RATEBLUR_<FLAG> (e.g. RATEBLUR_TAU=50000, RATEBLUR_THREADS=4);
explicit flags win over the environment.

Per-command stream ids keep random draws of different commands
independent while sharing one seed root; the tensor a bare `simulate`
synthesizes internally is the exact tensor `synth` writes at the same
seed.

Exit codes: 0 success, 2 usage error, 3 data error (malformed or
missing inputs), 4 numerical failure (degenerate distribution,
bracketing failure).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .analytic import analytic_vs_mc_check, derive_analytic_model
from .dataio import (
    DEFAULT_PROFILE,
    CalibrationProfile,
    RatingTensor,
    estimate_parameters,
    load_tensor,
    save_tensor,
    synthesize_tensor,
    validate_tensor,
)
from .engine import (
    MetricKind,
    PredictorSet,
    check_alignment,
    error_probability,
    estimate_density,
    exceedance_probability,
    overlap_area,
    sample_metric,
)
from .errors import (
    DataFormatError,
    DegenerateDistributionError,
    IndexMismatchError,
    NumericalError,
)
from .noisysim import (
    NoiseSpec,
    adaptive_noise_for_metric_gap,
    distort,
    noise_threshold_curve,
    offset_resolution_curves,
    optimal_recommender,
    rating_set_from_tensor,
    resolve_leaderboard,
)
from .significance import sample_srmse
from .statmath import RandomSeed
from .uncertainty import (
    convergence_error_probability,
    convergence_intersection,
    convergence_to_stationary,
    simulate_borderline_rmse,
)

SCHEMA_VERSION = 1

# stream ids, one per command, so one seed root yields independent draws
STREAM_COMPARE = 1
STREAM_LEADERBOARD = 3
STREAM_VALIDATE = 4
STREAM_SYNTH = 5
STREAM_SIMULATE_BASE = 10  # + sim id

_SIM_TAU = {1: 10**5, 2: 10**5, 3: 10**5, 4: 2 * 10**4, 5: 2 * 10**4,
            6: 2 * 10**4, 7: 10**4}


def _env_default(flag: str, fallback, cast=None):
    # argparse applies type= only to command-line values, so env-supplied
    # defaults must be coerced here
    raw = os.environ.get("RATEBLUR_" + flag.upper().replace("-", "_"))
    if raw is None:
        return fallback
    return cast(raw) if cast else raw


def _add_common(parser: argparse.ArgumentParser, *, tau_default=None):
    parser.add_argument("--tau", type=int,
                        default=_env_default("tau", tau_default, int),
                        help="MC trials per metric sample "
                             f"(default {tau_default})")
    parser.add_argument("--bins", type=int, default=_env_default("bins", 55, int),
                        help="histogram bins for densities (default 55)")
    parser.add_argument("--alpha", type=float,
                        default=_env_default("alpha", 0.05, float),
                        help="significance level for intervals and CIs "
                             "(default 0.05)")
    parser.add_argument("--seed", type=int, default=_env_default("seed", 0, int),
                        help="root seed; all randomness derives from it "
                             "(default 0)")
    parser.add_argument("--threads", type=int,
                        default=_env_default("threads", 1, int),
                        help="worker threads; never changes results "
                             "(default 1)")
    parser.add_argument("--out", default=_env_default("out", "."),
                        help="output directory (default .)")
    parser.add_argument("--no-timestamp", action="store_true",
                        default=str(_env_default("no_timestamp", "")) == "1",
                        help="omit the generated-at field for byte-stable "
                             "reruns")


def _add_metric(parser: argparse.ArgumentParser):
    parser.add_argument("--metric", choices=["rmse", "srmse", "mae", "msd"],
                        default=_env_default("metric", "rmse"),
                        help="metric kind (default rmse)")
    parser.add_argument("--mode", choices=["conditional", "filtered"],
                        default=_env_default("mode", "conditional"),
                        help="sRMSE construction (default conditional)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rateblur",
        description="Metric distributions under rating uncertainty: "
                    "simulate, compare, and resolve leaderboards.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="write a calibrated synthetic "
                                           "rating tensor")
    p_synth.add_argument("--profile", help="calibration profile JSON "
                                           "(default: built-in profile)")
    p_synth.add_argument("--users", type=int,
                         default=_env_default("users", 67, int),
                         help="panel size (default 67)")
    p_synth.add_argument("--save-latent", action="store_true",
                         help="also write the latent slice parameters")
    _add_common(p_synth)

    p_val = sub.add_parser("validate", help="distributional checks on a "
                                            "tensor")
    p_val.add_argument("--tensor", required=True, help="tensor CSV path")
    p_val.add_argument("--power", action="store_true",
                       help="estimate the KS test's power at this trial "
                            "count")
    _add_common(p_val)

    p_cmp = sub.add_parser("compare", help="metric distributions and error "
                                           "probability for two predictor "
                                           "files")
    p_cmp.add_argument("--tensor", required=True, help="tensor CSV path")
    p_cmp.add_argument("--pred-a", required=True,
                       help="predictor CSV (user,item,prediction)")
    p_cmp.add_argument("--pred-b", required=True,
                       help="predictor CSV (user,item,prediction)")
    p_cmp.add_argument("--coupled", action="store_true",
                       help="score both predictors on identical rating "
                            "draws instead of independent ones")
    p_cmp.add_argument("--estimator", choices=["paired", "product"],
                       default=_env_default("estimator", "paired"),
                       help="error-probability estimator (default paired)")
    _add_metric(p_cmp)
    _add_common(p_cmp, tau_default=10**6)

    p_sim = sub.add_parser("simulate", help="run one of the seven studies")
    p_sim.add_argument("--sim", type=int, required=True,
                       help="study id, 1..7")
    p_sim.add_argument("--tensor", help="tensor CSV; required for sims 1-3, "
                                        "synthesized internally otherwise")
    p_sim.add_argument("--profile", help="calibration profile JSON for "
                                         "internal synthesis")
    p_sim.add_argument("--users", type=int,
                       default=_env_default("users", 67, int),
                       help="panel size for internal synthesis (default 67)")
    p_sim.add_argument("--n-grid", default=None,
                       help="comma list of observation counts (sims 2, 3)")
    p_sim.add_argument("--pair", default=_env_default("pair", "1,3"),
                       help="recommender pair for sim 3, 1-based into "
                            "(mean, trial-1, ...) (default 1,3)")
    p_sim.add_argument("--p-grid", default=None,
                       help="comma list of noise levels (sims 4, 7)")
    p_sim.add_argument("--deltas", default=None,
                       help="comma list of gap sizes (sims 5, 6)")
    p_sim.add_argument("--offsets", default=None,
                       help="comma list of baseline offsets (sims 5, 6)")
    p_sim.add_argument("--p-bar", type=float,
                       default=_env_default("p_bar", 0.05, float),
                       help="detection bar on the error probability "
                            "(default 0.05)")
    p_sim.add_argument("--noise-repeats", type=int,
                       default=_env_default("noise_repeats", 1, int),
                       help="corruption redraws for threshold bands "
                            "(sims 4, 7; default 1)")
    _add_metric(p_sim)
    _add_common(p_sim)

    p_lb = sub.add_parser("leaderboard", help="which published score gaps "
                                              "survive rating blur")
    p_lb.add_argument("--entries", required=True,
                      help="CSV of label,rmse rows")
    p_lb.add_argument("--offsets", required=True,
                      help="comma list of assumed baseline offsets; the "
                           "verdict is conditional on this grid by design")
    p_lb.add_argument("--tensor", help="tensor CSV; synthesized internally "
                                       "when omitted")
    p_lb.add_argument("--profile", help="calibration profile JSON for "
                                        "internal synthesis")
    p_lb.add_argument("--users", type=int,
                      default=_env_default("users", 67, int),
                      help="panel size for internal synthesis (default 67)")
    p_lb.add_argument("--p-bar", type=float,
                      default=_env_default("p_bar", 0.05, float),
                      help="evidence bar on the error probability "
                           "(default 0.05)")
    _add_metric(p_lb)
    _add_common(p_lb, tau_default=10**4)

    return parser


def _pure(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {str(k): _pure(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pure(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pure(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_report(args, command: str, config: dict, results: dict,
                  name: str) -> str:
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": _pure(config),
        "results": _pure(results),
    }
    if not args.no_timestamp:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(args, name: str, header, rows) -> str:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(c) for c in row])
    return path


def _cell(c):
    if isinstance(c, (float, np.floating)):
        return repr(float(c))
    if isinstance(c, (np.integer,)):
        return int(c)
    return c


def _base_config(args, **extra) -> dict:
    # threads and out are execution details: results never depend on them,
    # and echoing them would break byte-identity across equivalent runs
    cfg = {
        "tau": getattr(args, "tau", None),
        "bins": args.bins,
        "alpha": args.alpha,
        "seed": args.seed,
    }
    for key in ("metric", "mode"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    cfg.update(extra)
    return cfg


def _parse_list(text: str, kind=float, flag: str = "") -> list:
    try:
        return [kind(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise DataFormatError(f"{flag}: expected a comma list, got {text!r}") \
            from None


def _load_profile(args) -> CalibrationProfile:
    if getattr(args, "profile", None):
        return CalibrationProfile.from_file(args.profile)
    return DEFAULT_PROFILE


def _tensor_for(args, seed_root: int) -> RatingTensor:
    """Load --tensor, or synthesize the default tensor for this seed."""
    if getattr(args, "tensor", None):
        return load_tensor(args.tensor)
    profile = _load_profile(args)
    return synthesize_tensor(profile, users=args.users,
                             seed=RandomSeed(seed_root, STREAM_SYNTH))


def load_predictors(path, tensor: RatingTensor, label: str) -> PredictorSet:
    """Read a user,item,prediction CSV aligned to the tensor's pairs."""
    from .dataio import _parse_id
    values = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ("user", "item", "prediction")
        if header is None or tuple(h.strip().lower() for h in header) != expected:
            raise DataFormatError(
                f"{path}: line 1: expected header user,item,prediction, "
                f"got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            key = (_parse_id(row[0]), _parse_id(row[1]))
            if key in values:
                raise DataFormatError(
                    f"{path}: line {lineno}: duplicate prediction for {key}")
            try:
                values[key] = float(row[2])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: prediction must be numeric, "
                    f"got {row[2]!r}") from None
    if not values:
        raise DataFormatError(f"{path}: no predictions")
    pairs = sorted(values)
    pred = PredictorSet(pairs, np.array([values[p] for p in pairs]),
                        label=label)
    return pred


def _metric_kind(args) -> MetricKind:
    return MetricKind(args.metric)


def _sample_any(ratings, pred, args, trials, seed, tag):
    kind = _metric_kind(args)
    if kind is MetricKind.SRMSE:
        return sample_srmse(ratings, pred, args.alpha, trials, seed,
                            args.mode, stream_tag=tag, threads=args.threads)
    return sample_metric(ratings, pred, kind, trials, seed, stream_tag=tag,
                         threads=args.threads)


def cmd_synth(args) -> int:
    profile = _load_profile(args)
    seed = RandomSeed(args.seed, STREAM_SYNTH)
    result = synthesize_tensor(profile, users=args.users, seed=seed,
                               return_latent=args.save_latent)
    tensor, latent = result if args.save_latent else (result, None)
    os.makedirs(args.out, exist_ok=True)
    tensor_path = os.path.join(args.out, "tensor.csv")
    save_tensor(tensor, tensor_path)
    est = estimate_parameters(tensor)
    fractions = [float(np.mean([est[(u, i)].sd > 0 for u in tensor.users]))
                 for i in tensor.items]
    results = {
        "tensor_file": "tensor.csv",
        "users": len(tensor.users),
        "items": len(tensor.items),
        "trials": tensor.trials,
        "noisy_fraction_per_item": fractions,
        "profile": profile.to_dict(),
    }
    if latent is not None:
        latent_path = os.path.join(args.out, "latent.json")
        payload = {
            f"{u},{i}": [float(latent["mu"][ui, ii]),
                         float(latent["sigma"][ui, ii])]
            for ui, u in enumerate(tensor.users)
            for ii, i in enumerate(tensor.items)
        }
        with open(latent_path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        results["latent_file"] = "latent.json"
    _write_report(args, "synth", _base_config(args, users=args.users),
                  results, "synth_report.json")
    return 0


def cmd_validate(args) -> int:
    tensor = load_tensor(args.tensor)
    report = validate_tensor(tensor, alpha=args.alpha,
                             power_check=args.power,
                             power_seed=RandomSeed(args.seed, STREAM_VALIDATE))
    results = {
        "n_slices": report.n_slices,
        "n_noisy": report.n_noisy,
        "noisy_fraction_per_item": list(report.noisy_fraction_per_item),
        "ks_tested": report.ks_tested,
        "ks_rejections": report.ks_rejections,
        "ks_min_p": report.ks_min_p,
        "fitted_params_caveat": report.fitted_params_caveat,
        "welch_p": [[t1, t2, p] for (t1, t2), p in sorted(report.welch_p.items())],
        "levene_p": [[t1, t2, p] for (t1, t2), p in sorted(report.levene_p.items())],
        "welch_rejections": report.welch_rejections,
        "levene_rejections": report.levene_rejections,
        "cohorts_consistent": report.cohorts_consistent,
        "ks_power": report.ks_power,
    }
    _write_report(args, "validate", _base_config(args, tensor=args.tensor),
                  results, "validate_report.json")
    return 0


def cmd_compare(args) -> int:
    tensor = load_tensor(args.tensor)
    ratings = rating_set_from_tensor(tensor)
    pred_a = load_predictors(args.pred_a, tensor, "A")
    pred_b = load_predictors(args.pred_b, tensor, "B")
    check_alignment(ratings, pred_a)
    check_alignment(ratings, pred_b)
    seed = RandomSeed(args.seed, STREAM_COMPARE)
    tau = int(args.tau)
    s_a = _sample_any(ratings, pred_a, args, tau, seed, 0)
    s_b = _sample_any(ratings, pred_b, args, tau, seed,
                      0 if args.coupled else 1)
    comp = error_probability(s_a, s_b, args.bins, args.estimator)
    d_a = estimate_density(s_a.values, args.bins)
    d_b = estimate_density(s_b.values, args.bins)
    results = {
        "metric": args.metric,
        "a": {"label": "A", "mean": float(np.mean(s_a.values)),
              "variance": float(np.var(s_a.values))},
        "b": {"label": "B", "mean": float(np.mean(s_b.values)),
              "variance": float(np.var(s_b.values))},
        "order": list(comp.order),
        "p_error": comp.p_error,
        "overlap_a": comp.overlap_a,
        "estimator": comp.estimator,
        "coupled": bool(args.coupled),
        "densities_file": "densities.csv",
    }
    rows = []
    for name, dens in (("a", d_a), ("b", d_b)):
        for k in range(dens.bins):
            rows.append((name, dens.edges[k], dens.edges[k + 1],
                         dens.heights[k]))
    _write_csv(args, "densities.csv",
               ("sample", "bin_lo", "bin_hi", "height"), rows)
    _write_report(args, "compare",
                  _base_config(args, tensor=args.tensor, pred_a=args.pred_a,
                               pred_b=args.pred_b, estimator=args.estimator,
                               coupled=bool(args.coupled)),
                  results, "compare_report.json")
    return 0


def _sim_grids(args, sim: int):
    if args.n_grid is not None:
        n_grid = _parse_list(args.n_grid, int, "--n-grid")
    else:
        n_grid = ([200, 500, 1000, 2000, 3000, 4000, 5000] if sim == 2
                  else [30, 60, 100, 200, 400, 800, 1600])
    if args.p_grid is not None:
        p_grid = _parse_list(args.p_grid, float, "--p-grid")
    else:
        p_grid = [round(0.01 * k, 2)
                  for k in range(0, 41 if sim == 4 else 31)]
    deltas = (_parse_list(args.deltas, float, "--deltas")
              if args.deltas is not None else [0.05, 0.10, 0.15, 0.20, 0.25])
    offsets = (_parse_list(args.offsets, float, "--offsets")
               if args.offsets is not None
               else [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    return n_grid, p_grid, deltas, offsets


def cmd_simulate(args, parser) -> int:
    sim = args.sim
    if not (1 <= sim <= 7):
        parser.error(f"--sim must be 1..7, got {sim}")
    if sim in (1, 2, 3) and not args.tensor:
        parser.error(f"simulation {sim} needs --tensor (borderline studies "
                     "run on a concrete tensor)")
    tau = int(args.tau) if args.tau is not None else _SIM_TAU[sim]
    seed = RandomSeed(args.seed, STREAM_SIMULATE_BASE + sim)
    tensor = _tensor_for(args, args.seed)
    n_grid, p_grid, deltas, offsets = _sim_grids(args, sim)
    config = _base_config(args, sim=sim, tau=tau,
                          tensor=getattr(args, "tensor", None),
                          p_bar=args.p_bar)

    if sim == 1:
        study = simulate_borderline_rmse(tensor, args.alpha, tau, args.bins,
                                         seed, kind=_metric_kind(args),
                                         threads=args.threads)
        results = {
            "labels": list(study.labels),
            "means": {f"{case}:{label}": study.means[(case, label)]
                      for case, label in study.means},
            "l1_distances": {f"{case}:{a}:{b}": v
                             for (case, a, b), v in study.l1_distances.items()},
            "curves_file": "sim1_densities.csv",
        }
        rows = []
        for (case, label), dens in sorted(study.densities.items()):
            for k in range(dens.bins):
                rows.append((case, label, dens.edges[k], dens.edges[k + 1],
                             dens.heights[k]))
        _write_csv(args, "sim1_densities.csv",
                   ("case", "label", "bin_lo", "bin_hi", "height"), rows)
        _write_report(args, "simulate", config, results, "sim1_report.json")
        return 0

    if sim == 2:
        mm = convergence_intersection(tensor, n_grid, args.alpha, tau,
                                      args.bins, seed, threads=args.threads)
        stat = convergence_to_stationary(tensor, n_grid, args.alpha, tau,
                                         args.bins, seed,
                                         threads=args.threads)
        crossing = next((n for n, lo, hi in stat if min(lo, hi) >= 0.9), None)
        results = {
            "min_vs_max": [[n, v] for n, v in mm],
            "vs_stationary": [[n, lo, hi] for n, lo, hi in stat],
            "stationary_crossing_0p9": crossing,
            "curves_file": "sim2_curve.csv",
        }
        rows = [(n, v, lo, hi) for (n, v), (_, lo, hi) in zip(mm, stat)]
        _write_csv(args, "sim2_curve.csv",
                   ("n", "min_vs_max", "min_vs_stationary",
                    "max_vs_stationary"), rows)
        _write_report(args, "simulate", config, results, "sim2_report.json")
        return 0

    if sim == 3:
        pair = tuple(_parse_list(args.pair, int, "--pair"))
        if len(pair) != 2:
            parser.error("--pair must be two comma-separated indices")
        curves = convergence_error_probability(tensor, n_grid, args.alpha,
                                               tau, seed, pair=pair,
                                               threads=args.threads)
        results = {
            "pair": list(pair),
            "min_case": [[n, p] for n, p in curves["min"]],
            "max_case": [[n, p] for n, p in curves["max"]],
            "curves_file": "sim3_curve.csv",
        }
        rows = [(n, p_min, p_max)
                for (n, p_min), (_, p_max) in zip(curves["min"],
                                                  curves["max"])]
        _write_csv(args, "sim3_curve.csv", ("n", "p_min_case", "p_max_case"),
                   rows)
        _write_report(args, "simulate", config, results, "sim3_report.json")
        return 0

    if sim == 4:
        rep = noise_threshold_curve(tensor, _metric_kind(args), p_grid,
                                    args.p_bar, tau, seed, alpha=args.alpha,
                                    mode=args.mode,
                                    noise_repeats=args.noise_repeats,
                                    threads=args.threads)
        results = {
            "metric": args.metric,
            "p_grid": list(rep.p_grid),
            "curve": list(rep.curve),
            "threshold": rep.threshold,
            "thresholds": list(rep.thresholds),
            "threshold_band": (list(rep.threshold_band)
                               if rep.threshold_band else None),
            "curves_file": "sim4_curve.csv",
        }
        _write_csv(args, "sim4_curve.csv", ("level", "p_error"),
                   list(zip(rep.p_grid, rep.curve)))
        _write_report(args, "simulate", config, results, "sim4_report.json")
        return 0

    if sim == 5:
        curves = offset_resolution_curves(tensor, deltas, offsets, args.p_bar,
                                          tau, seed, kind=_metric_kind(args),
                                          alpha=args.alpha, mode=args.mode,
                                          threads=args.threads)
        results = {
            "deltas": deltas,
            "offsets": offsets,
            "curves": {str(d): [[o, p] for o, p in curve]
                       for d, curve in curves.items()},
            "curves_file": "sim5_curves.csv",
        }
        rows = [(d, o, p) for d in deltas for o, p in curves[d]]
        _write_csv(args, "sim5_curves.csv", ("delta", "offset", "p_error"),
                   rows)
        _write_report(args, "simulate", config, results, "sim5_report.json")
        return 0

    if sim == 6:
        ratings = rating_set_from_tensor(tensor)
        base = optimal_recommender(tensor)
        samples_a = {}
        for off in offsets:
            pred_a = distort(base, NoiseSpec(off, seed, 1)) \
                if off > 0 else base
            samples_a[off] = _sample_any(ratings, pred_a, args, tau, seed, 0)
        rows = []
        curves = {}
        for d in deltas:
            curve = []
            for off in offsets:
                res = adaptive_noise_for_metric_gap(
                    tensor, d, base_offset=off, trials=tau, seed=seed,
                    kind=_metric_kind(args), alpha=args.alpha,
                    mode=args.mode, threads=args.threads)
                pred_b = distort(base, NoiseSpec(res.level, seed, 2))
                s_b = _sample_any(ratings, pred_b, args, tau, seed, 1)
                p_err = exceedance_probability(samples_a[off], s_b)
                curve.append([off, p_err, res.level])
                rows.append((d, off, p_err, res.level))
            curves[str(d)] = curve
        results = {
            "deltas": deltas,
            "offsets": offsets,
            "curves": curves,
            "curves_file": "sim6_curves.csv",
        }
        _write_csv(args, "sim6_curves.csv",
                   ("delta", "offset", "p_error", "noise_level"), rows)
        _write_report(args, "simulate", config, results, "sim6_report.json")
        return 0

    # sim 7: threshold comparison rmse vs srmse on identical data and seeds
    rep_rmse = noise_threshold_curve(tensor, MetricKind.RMSE, p_grid,
                                     args.p_bar, tau, seed, alpha=args.alpha,
                                     mode=args.mode, threads=args.threads)
    rep_srmse = noise_threshold_curve(tensor, MetricKind.SRMSE, p_grid,
                                      args.p_bar, tau, seed, alpha=args.alpha,
                                      mode=args.mode, threads=args.threads)
    ratio = (None if rep_rmse.threshold is None or rep_srmse.threshold is None
             else rep_srmse.threshold / rep_rmse.threshold)
    results = {
        "p_grid": list(p_grid),
        "rmse_curve": list(rep_rmse.curve),
        "srmse_curve": list(rep_srmse.curve),
        "rmse_threshold": rep_rmse.threshold,
        "srmse_threshold": rep_srmse.threshold,
        "threshold_ratio": ratio,
        "srmse_mode": args.mode,
        "curves_file": "sim7_curve.csv",
    }
    _write_csv(args, "sim7_curve.csv", ("level", "p_rmse", "p_srmse"),
               list(zip(p_grid, rep_rmse.curve, rep_srmse.curve)))
    _write_report(args, "simulate", config, results, "sim7_report.json")
    return 0


def load_entries(path) -> list:
    """Read a leaderboard CSV of label,rmse rows."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header) != ("label", "rmse"):
            raise DataFormatError(
                f"{path}: line 1: expected header label,rmse, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                score = float(row[1])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: rmse must be numeric, "
                    f"got {row[1]!r}") from None
            if score <= 0:
                raise DataFormatError(
                    f"{path}: line {lineno}: rmse must be > 0, got {score}")
            entries.append((row[0].strip(), score))
    if len(entries) < 2:
        raise DataFormatError(f"{path}: need at least two entries")
    return entries


def cmd_leaderboard(args) -> int:
    entries = load_entries(args.entries)
    offsets = _parse_list(args.offsets, float, "--offsets")
    if not offsets:
        raise DataFormatError("--offsets: empty grid")
    tensor = _tensor_for(args, args.seed)
    seed = RandomSeed(args.seed, STREAM_LEADERBOARD)
    tau = int(args.tau)
    cells = resolve_leaderboard(entries, offsets, tensor, args.p_bar, tau,
                                seed, kind=_metric_kind(args),
                                alpha=args.alpha, mode=args.mode,
                                threads=args.threads)
    scores = dict(entries)
    best_label = min(scores, key=lambda l: (scores[l], l))
    verdicts = []
    rows = []
    for cell in cells:
        verdict = (None if cell.resolvable is None
                   else ("evident" if cell.resolvable else "not_evident"))
        verdicts.append({
            "label": cell.label,
            "offset": cell.offset,
            "relative_gap": cell.relative_gap,
            "noise_level": cell.noise_level,
            "p_error": cell.p_error,
            "verdict": verdict,
        })
        rows.append((cell.label, scores[cell.label], cell.relative_gap,
                     cell.offset,
                     "" if cell.noise_level is None else cell.noise_level,
                     "" if cell.p_error is None else cell.p_error,
                     "" if verdict is None else verdict))
    results = {
        "reference": best_label,
        "entries": [{"label": l, "rmse": s} for l, s in entries],
        "cells": verdicts,
        "matrix_file": "leaderboard_matrix.csv",
    }
    _write_csv(args, "leaderboard_matrix.csv",
               ("label", "rmse", "relative_gap", "offset", "noise_level",
                "p_error", "verdict"), rows)
    _write_report(args, "leaderboard",
                  _base_config(args, entries=args.entries, offsets=offsets,
                               p_bar=args.p_bar),
                  results, "leaderboard_report.json")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "simulate":
            return cmd_simulate(args, parser)
        if args.command == "leaderboard":
            return cmd_leaderboard(args)
        parser.error(f"unknown command {args.command!r}")
    except (DataFormatError, IndexMismatchError, FileNotFoundError,
            NotADirectoryError, IsADirectoryError) as exc:
        print(f"rateblur: data error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, DegenerateDistributionError) as exc:
        print(f"rateblur: numerical failure: {exc}", file=sys.stderr)
        return 4
    return 2


if __name__ == "__main__":
    sys.exit(main())
