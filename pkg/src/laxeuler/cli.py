"""Command-line entry point.

Exit codes: 0 success, 1 numerical failure or failed check, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .dynamics import (
    FlowState,
    NumericalBlowup,
    ResonanceError,
    TimeStepper,
    ZakharovParams,
    diagnostics,
    initial_condition,
    integrate,
)
from .lax import NonStationaryError, eigenfunction_transport_check, spectrum_along_flow
from .reports import ResidualReport, all_passed
from .spectral import BandError, Grid, SolvabilityError, from_modes, transform_inverse
from .verification import (
    bracket_identity_suite,
    compatibility_residual,
    conservation_suite,
    random_test_field,
    zakharov_residual,
)

log = logging.getLogger("laxeuler")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITES = ("bracket", "compatibility", "zakharov", "conservation")


class UsageError(Exception):
    pass


def _ic_params(cfg: io.RunConfig, name: str) -> dict:
    return {
        "perturbed-shear": {"eps": cfg.eps, "m": cfg.m},
        "shear": {"amplitude": cfg.amplitude},
        "taylor-green": {"amplitude": cfg.amplitude},
        "random-band": {"band": cfg.band},
    }.get(name, {})


def _initial(cfg: io.RunConfig, default: str):
    name = cfg.ic or default
    try:
        return name, initial_condition(name, _ic_params(cfg, name), Grid(cfg.n), cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _finish(checks) -> int:
    for c in checks:
        print(c.line())
    return EXIT_OK if all_passed(checks) else EXIT_FAIL


def cmd_simulate(cfg: io.RunConfig) -> int:
    name, omega = _initial(cfg, "perturbed-shear")
    out = Path(cfg.out)
    try:
        stepper = TimeStepper(cfg.dt)
        nsteps = stepper.steps_to(cfg.T)
        every = stepper.steps_to(cfg.snapshot_interval)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if every < 1:
        raise UsageError("snapshot_interval must be at least one step")
    stepper.check_cfl(omega)
    rows = [diagnostics(omega).as_row(0.0)]
    files = []

    def snap(index, state):
        path = out / f"snapshot_{index:06d}.laxf"
        io.write_snapshot(path, transform_inverse(state.omega), state.time)
        files.append(path.name)

    state = FlowState(0.0, omega)
    snap(0, state)

    def record(i, st):
        if i % every == 0 or i == nsteps:
            rows.append(diagnostics(st.omega).as_row(st.time))
            snap(i, st)

    try:
        state = integrate(state, stepper, nsteps, callback=record)
    except NumericalBlowup as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        io.write_diagnostics(out / "diagnostics.csv", rows)
        return EXIT_FAIL
    io.write_diagnostics(out / "diagnostics.csv", rows)
    io.write_report(out / "simulate.json", "simulate", cfg, [], ic=name, snapshots=files, final_time=state.time)
    print(f"simulated {name} to t={state.time:g} in {nsteps} steps; {len(files)} snapshots in {out}")
    return EXIT_OK


def _verify_compatibility(cfg, grid):
    checks = []
    for trial in range(cfg.trials):
        omega = random_test_field(grid, cfg.band, (cfg.seed, trial, 0))
        phi = random_test_field(grid, cfg.phi_band, (cfg.seed, trial, 1), real=False)
        r = compatibility_residual(omega, phi, tolerance=cfg.tolerance)
        r.context.update(seed=cfg.seed, trial=trial)
        checks.append(r)
    omega = random_test_field(grid, cfg.band, (cfg.seed, 0, 0))
    phi = random_test_field(grid, cfg.phi_band, (cfg.seed, 0, 1), real=False)
    delta = cfg.perturbation
    bump = from_modes(grid, {(1, 0): 0.5, (-1, 0): 0.5}, real=True) * delta
    perturbed = compatibility_residual(omega, phi, perturbation=bump)
    # sensitivity: the perturbed residual must track delta within a factor of 10
    ratio = perturbed.relative / delta
    checks.append(
        ResidualReport.build(
            "negative_control",
            abs(math.log10(ratio)) if ratio > 0 else math.inf,
            1.0,
            1.0,
            delta=delta,
            perturbed_relative=perturbed.relative,
            ratio=ratio,
            seed=cfg.seed,
        )
    )
    return checks


def _verify_zakharov(cfg, grid):
    lams = cfg.lam if cfg.lam is not None else [0j, 1 + 1j]
    if cfg.ic:
        _, omega = _initial(cfg, cfg.ic)
    else:
        omega = random_test_field(grid, cfg.band, (cfg.seed, 0, 0))
    phi = random_test_field(grid, cfg.phi_band, (cfg.seed, 0, 1), real=False)
    checks = []
    for lam in lams:
        params = ZakharovParams(cfg.alpha, cfg.beta, cfg.gamma, cfg.delta, lam, cfg.resonance_policy)
        try:
            checks.append(zakharov_residual(omega, phi, params, tolerance=cfg.tolerance))
        except ResonanceError as exc:
            print(f"resonance: {exc}", file=sys.stderr)
            checks.append(
                ResidualReport(
                    "resonance", math.inf, 0.0, math.inf, 0.0, False,
                    {"modes": exc.modes, "message": str(exc), "lam": lam},
                )
            )
            break
    return checks


def cmd_verify(cfg: io.RunConfig, suite: str) -> int:
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    grid = Grid(cfg.n)
    try:
        if suite == "bracket":
            checks = bracket_identity_suite(grid, cfg.band, cfg.seed, cfg.trials, tolerance=cfg.tolerance)
        elif suite == "compatibility":
            checks = _verify_compatibility(cfg, grid)
        elif suite == "zakharov":
            checks = _verify_zakharov(cfg, grid)
        else:
            name = cfg.ic or "perturbed-shear"
            checks = conservation_suite(
                name,
                TimeStepper(cfg.dt),
                cfg.T,
                cfg.samples,
                grid,
                _ic_params(cfg, name),
                cfg.seed,
                drift_tolerance=cfg.drift_tolerance,
                casimir_tolerance=cfg.casimir_tolerance,
                halvings=cfg.halvings,
            )
    except NumericalBlowup as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (BandError, ValueError) as exc:
        if isinstance(exc, ResonanceError):
            raise
        raise UsageError(str(exc)) from None
    io.write_report(Path(cfg.out) / f"verify_{suite}.json", f"verify-{suite}", cfg, checks)
    return _finish(checks)


def cmd_spectrum(cfg: io.RunConfig) -> int:
    name, omega = _initial(cfg, "perturbed-shear")
    stepper = TimeStepper(cfg.dt)
    spectra = []
    try:
        for K in cfg.K:
            spectra.append(spectrum_along_flow(omega, stepper, K, cfg.sample_times))
    except NumericalBlowup as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    extra = {"ic": name, "spectra": [s.to_json() for s in spectra]}
    if len(spectra) > 1:
        final = [s.relative_drift[-1] if s.drift else 0.0 for s in spectra]
        extra["relative_drift_by_K"] = final
        extra["relative_drift_decreasing"] = bool(all(b < a for a, b in zip(final, final[1:])))
    for s in spectra:
        print(f"K={s.K}: drift={s.drift} relative={s.relative_drift}")
    io.write_report(Path(cfg.out) / "spectrum.json", "spectrum", cfg, [], **extra)
    return EXIT_OK


def cmd_transport(cfg: io.RunConfig) -> int:
    name, omega = _initial(cfg, "shear")
    try:
        checks = eigenfunction_transport_check(
            omega,
            cfg.K[0],
            cfg.mode_index,
            TimeStepper(cfg.dt),
            cfg.T,
            tolerance=cfg.transport_tolerance,
            norm_tolerance=cfg.norm_tolerance,
        )
    except NonStationaryError as exc:
        print(f"transport check needs a stationary initial condition: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalBlowup as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (BandError, IndexError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    io.write_report(Path(cfg.out) / "transport.json", "transport", cfg, checks, ic=name)
    return _finish(checks)


_FLAG_KEYS = [
    "n", "dt", "T", "ic", "seed", "K", "out", "snapshot_interval", "eps", "m", "amplitude",
    "band", "phi_band", "trials", "samples", "alpha", "beta", "gamma", "delta", "lambda",
    "resonance_policy", "sample_times", "mode_index", "tolerance", "transport_tolerance",
    "norm_tolerance", "drift_tolerance", "casimir_tolerance", "perturbation", "halvings",
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file, or a JSON report to replay")
    for key in _FLAG_KEYS:
        common.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    parser = argparse.ArgumentParser(prog="laxeuler", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate the vorticity equation")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite_pos", nargs="?", metavar="SUITE")
    v.add_argument("--suite", dest="suite", default=None)
    sub.add_parser("spectrum", parents=[common], help="track the spectrum of L along the flow")
    sub.add_parser("transport", parents=[common], help="transport an eigenfunction on a steady flow")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None}
    if args.command == "verify":
        suite = args.suite or args.suite_pos
        if suite is not None:
            overrides["suite"] = suite
    try:
        cfg = io.load_config(args.config, overrides)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            if not cfg.suite:
                raise UsageError("verify needs a suite")
            return cmd_verify(cfg, cfg.suite)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        return cmd_transport(cfg)
    except (io.ConfigError, UsageError) as exc:
        print(f"laxeuler {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResonanceError as exc:
        print(f"resonance: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (NumericalBlowup, np.linalg.LinAlgError, SolvabilityError) as exc:
        print(f"laxeuler {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
