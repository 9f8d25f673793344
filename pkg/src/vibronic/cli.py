"""Command-line surface: eigens, run, analyze, check-identities.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import measures, units
from .analysis import build_report
from .dynamics import NormDriftError, SpectralRangeError
from .scenario import (ConfigError, ScenarioConfig, hamiltonian_bare_values,
                       load_config, run_scenario, solve_bases, write_outputs)
from .states import BipartiteState, project_coefficients, reconstruct_state
from .states import VibronicCoefficients

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_eigens(args) -> int:
    cfg = load_config(args.config)
    bases = solve_bases(cfg)
    for basis in bases.bases:
        print(f"channel {basis.label}: {len(basis)} states")
        for v, energy in enumerate(basis.energies):
            print(f"  v = {v:3d}   E = {units.au_to_cm1(energy):14.6f} cm-1")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_scenario(cfg)
    written = write_outputs(result, cfg)
    for name, path in written.items():
        print(f"{name}: {path}")
    worst = max(result.identities.values())
    print(f"largest identity residual: {worst:.3e}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    series = measures.MeasureSeries.from_csv(args.series)
    field = args.field
    if field not in series.columns:
        print(f"field '{field}' not in {args.series}", file=sys.stderr)
        return EXIT_CONFIG
    report = build_report(None, series.times, series[field])
    payload = report.as_dict()
    for entry in payload["observed_peaks"]:
        entry["period"] = units.au_to_ps(entry["period"])
    payload["extremes"]["t_min"] = units.au_to_ps(payload["extremes"]["t_min"])
    payload["extremes"]["t_max"] = units.au_to_ps(payload["extremes"]["t_max"])
    del payload["predicted_periods"]
    del payload["background_weight"]
    text = json.dumps(payload, indent=2)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
        print(f"report: {args.json}")
    else:
        print(text)
    return EXIT_OK


def _random_states(cfg: ScenarioConfig, bases, n_samples: int, rng):
    """Random normalized states spanning the configured bases."""
    for _ in range(n_samples):
        coeffs = []
        for basis in bases.bases:
            c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
            coeffs.append(c)
        flat = np.concatenate(coeffs)
        flat /= np.linalg.norm(flat)
        sizes = np.concatenate([[0], np.cumsum(bases.sizes)])
        parts = tuple(flat[sizes[i]:sizes[i + 1]] for i in range(len(bases)))
        yield VibronicCoefficients(parts, bases)


def _cmd_check_identities(args) -> int:
    cfg = load_config(args.config)
    bases = solve_bases(cfg)
    v_values = hamiltonian_bare_values(cfg)
    rng = np.random.default_rng(args.seed)
    two_channel = len(cfg.channels) == 2

    worst = {"purity_plus_L": 0.0, "pairwise_L": 0.0, "coefficient_L": 0.0,
             "skew_equals_variance": 0.0, "entropy_bound": 0.0}
    if two_channel:
        worst["coherence_entropy"] = 0.0
        worst["skew_identity"] = 0.0
    n_el = len(cfg.channels)
    for coeffs in _random_states(cfg, bases, args.samples, rng):
        state = reconstruct_state(coeffs)
        lin = measures.linear_entropy(state)
        worst["purity_plus_L"] = max(worst["purity_plus_L"],
                                     abs(measures.purity(state) + lin - 1.0))
        worst["pairwise_L"] = max(worst["pairwise_L"],
                                  abs(lin - measures.linear_entropy_pairwise(state)))
        worst["coefficient_L"] = max(
            worst["coefficient_L"],
            abs(lin - measures.linear_entropy_from_coefficients(coeffs)))
        worst["skew_equals_variance"] = max(
            worst["skew_equals_variance"],
            abs(measures.skew_information_molecular(coeffs)
                - measures.energy_variance(coeffs)))
        worst["entropy_bound"] = max(worst["entropy_bound"],
                                     lin - (1.0 - 1.0 / n_el))
        if two_channel:
            worst["coherence_entropy"] = max(
                worst["coherence_entropy"],
                measures.coherence_entropy_residual(state))
            worst["skew_identity"] = max(
                worst["skew_identity"],
                measures.skew_identity_residual(state, v_values, cfg.grid.r))

    tolerances = {"purity_plus_L": 1e-15, "pairwise_L": 1e-12,
                  "coefficient_L": 1e-8, "skew_equals_variance": 0.0,
                  "entropy_bound": 1e-9, "coherence_entropy": 1e-12,
                  "skew_identity": 1e-10}
    failures = 0
    for name, value in worst.items():
        ok = value <= tolerances[name]
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {name}: max residual {value:.3e} "
              f"(tolerance {tolerances[name]:.0e})")

    # Short trajectory: same pipeline, truncated run, norm and measure checks.
    short = _shorten(cfg)
    result = run_scenario(short)
    for name, value in result.identities.items():
        tol = 1e-6 if name == "coefficient_linear_entropy" else 1e-9
        ok = value <= tol
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} trajectory {name}: max residual "
              f"{value:.3e} (tolerance {tol:.0e})")
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


def _shorten(cfg: ScenarioConfig, max_steps: int = 400) -> ScenarioConfig:
    import dataclasses

    span = cfg.run.t_end - cfg.run.t_start
    t_end = min(cfg.run.t_end, cfg.run.t_start + max_steps * cfg.run.dt)
    if t_end >= cfg.run.t_end:
        return cfg
    run = dataclasses.replace(cfg.run, t_end=t_end)
    return dataclasses.replace(cfg, run=run)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vibronic",
        description="Coupled-channel vibronic wave-packet runs and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigens", help="print vibrational levels per channel")
    p.add_argument("config")
    p.set_defaults(func=_cmd_eigens)

    p = sub.add_parser("run", help="run a scenario and write its outputs")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="spectral analysis of an existing series CSV")
    p.add_argument("series")
    p.add_argument("--field", default="L")
    p.add_argument("--json", default=None, help="write the report to this path")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("check-identities",
                       help="verify measure identities on random states and a short run")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_check_identities)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NormDriftError, SpectralRangeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
