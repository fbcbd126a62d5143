"""Command-line entry point: ``nlsnoise {sample-noise,run,study}``.

Exit codes: 0 success, 1 I/O failure or failed study check, 2 usage or
configuration error, 3 solver blow-up.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_run_config, load_study_config
from .diagnostics import fit_scaling, stochastic_bound_report, strichartz_probe
from .dynamics import SolverConfig, gauge_transform, solve_gauged, solve_physical, well_prepared_data
from .experiments import make_datum, monte_carlo_sweep
from .noise import GaugeData, MollifierSpec, build_gauge_data, sample_noise, zero_noise
from .records import checksum, frames_to_bytes, noise_from_bytes, noise_to_bytes, write_record
from .reporting import Manifest, default_out_dir, norms_csv, write_csv, write_json

log = logging.getLogger("nlsnoise")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3
STUDY_CHOICES = ("epsilon", "modulus", "bounds", "strichartz", "dispersive")


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _seed(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsnoise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-noise", help="draw a white-noise realization and write its record")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--lattice", type=_positive_int, required=True, help="lattice half-width K")
    p.add_argument("--out", type=Path, required=True, help="output record path")

    p = sub.add_parser("run", help="one solver run from a config file")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--frames", action="store_true", help="also write all frames as a binary record")

    p = sub.add_parser("study", help="run a study plan")
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("--study", choices=STUDY_CHOICES, required=True)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out", type=Path, default=None, help="output directory")
    return parser


# ---------------------------------------------------------------- commands


def cmd_sample_noise(args) -> int:
    noise = sample_noise(args.seed, args.lattice)
    data = noise_to_bytes(noise)
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_record(args.out, data)
    except OSError as err:
        log.error("cannot write %s: %s", args.out, err)
        return EXIT_FAIL
    # reload guards the record format against silent corruption
    noise_from_bytes(data).check_invariants()
    print(f"K={noise.K} seed={noise.seed} sha256={checksum(data)}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = load_run_config(args.config)
    except (ConfigError, OSError) as err:
        print(f"nlsnoise run: config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or default_out_dir()
    solver = cfg.solver
    N = solver.N
    K = N // 2 - 1
    noise = zero_noise(K, cfg.seed) if cfg.zero_noise else sample_noise(cfg.seed, K)
    amp = 0.0 if cfg.zero_noise else cfg.amplitude
    gauge0 = build_gauge_data(noise, MollifierSpec(0.0), N, amp, cfg.band)
    gauge = build_gauge_data(noise, MollifierSpec(cfg.epsilon), N, amp, cfg.band)
    w = make_datum(N, cfg.datum)
    manifest = Manifest("run", cfg.hash, seed=cfg.seed, N=N, lattice_K=K, epsilon=cfg.epsilon,
                        amplitude=cfg.amplitude, band=cfg.band, scheme=solver.scheme, dt=solver.dt, T=solver.T,
                        p=solver.p, expected_frames=solver.n_frames, C_eps=gauge.C_eps)
    if solver.scheme == "strang_physical":
        traj = solve_physical(well_prepared_data(w, gauge0, gauge), solver, gauge.xi, raise_on_blowup=False)
    else:
        traj = solve_gauged(w, solver, gauge, raise_on_blowup=False)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest.add_output("norms", norms_csv(out / "norms.csv", traj))
        if args.frames:
            path = out / "frames.bin"
            write_record(path, frames_to_bytes(traj.frames, traj.times, cfg.seed, cfg.epsilon))
            manifest.add_output("frames", path)
        status = EXIT_OK
        if traj.failure is not None:
            manifest.set(blowup={"time_reached": traj.failure.time_reached, "step": traj.failure.step,
                                 "message": str(traj.failure)})
            status = EXIT_BLOWUP
        manifest.set(exit_status=status, frames_written=len(traj.frames))
        manifest.write(out)
    except OSError as err:
        log.error("cannot write outputs to %s: %s", out, err)
        return EXIT_FAIL
    print(f"{len(traj.frames)} frames -> {out}")
    return status


def _bounds_study(sc, out: Path, manifest: Manifest) -> dict[str, bool]:
    plan = sc.plan
    rows, fits = [], []
    for seed in plan.seeds():
        noise = zero_noise(sc.bounds_N // 2 - 1, seed) if plan.zero_noise else None
        rep = stochastic_bound_report(seed, plan.eps_grid, sc.lp_exponents, sc.bounds_N,
                                      plan.noise_amplitude, noise=noise, min_eps_n=plan.min_eps_n)
        rows += [{"seed": seed, **r} for r in rep.rows]
        fits.append(rep.fits)
    eps = list(plan.eps_grid)
    mean_fits = {}
    for key in fits[0]:
        model = fits[0][key].model
        vals = np.mean([[r[key] for r in rows if r["seed"] == s] for s in plan.seeds()], axis=0)
        mean_fits[key] = fit_scaling(eps, vals, model)
    checks = {"C_eps_log_linear": mean_fits["C_eps"].r_squared > 0.99}
    for p in sc.lp_exponents:
        g, wk = mean_fits[f"grad_L{p:g}"], mean_fits[f"wick_L{p:g}"]
        checks[f"grad_L{p:g}_exponent"] = abs(g.fitted_exponent - 1) <= 0.35 and g.r_squared > 0.9
        checks[f"wick_L{p:g}_exponent"] = abs(wk.fitted_exponent - 2) <= 0.35 and wk.r_squared > 0.9
    manifest.add_output("table", write_csv(out / "bounds.csv", rows))
    manifest.add_output("summary", write_json(out / "bounds_summary.json", {
        "plan": plan.to_dict(), "N": sc.bounds_N, "seed_mean_fits": mean_fits,
        "per_seed_fits": fits, "checks": checks}))
    return checks


def _strichartz_study(sc, out: Path, manifest: Manifest) -> dict[str, bool]:
    plan = sc.plan
    N = plan.solver.N
    K = N // 2 - 1
    seed = plan.base_seed
    noise = zero_noise(K, seed) if plan.zero_noise else sample_noise(seed, K)
    amp = 0.0 if plan.zero_noise else plan.noise_amplitude
    gauges = [build_gauge_data(noise, MollifierSpec(e), N, amp, plan.noise_band)
              for e in plan.eps_grid]
    zeros = [GaugeData.zero(N, epsilon=e) for e in plan.eps_grid]
    kw = dict(sample_count=sc.strichartz_samples, delta=plan.delta, T=sc.strichartz_T,
              dt=sc.strichartz_dt, seed=seed)
    rep = strichartz_probe(gauges, **kw)
    ref = strichartz_probe(zeros, **kw)
    rows = []
    for label, r in (("sampled", rep), ("zero", ref)):
        for e, m, ratios in zip(r.epsilons, r.max_ratios, r.ratios):
            rows.append({"gauge": label, "epsilon": e, "max_ratio": m, "min_ratio": min(ratios),
                         "samples": len(ratios)})
    spread = max(abs(a - b) / b for row in ref.ratios for a, b in zip(row, ref.ratios[0]))
    checks = {
        "ratios_finite": all(math.isfinite(x) for row in rep.ratios for x in row),
        "zero_gauge_eps_independent": spread <= 1e-8,
        "log_exponent_at_most_4": rep.fit is None or rep.fit.fitted_exponent <= 4,
    }
    manifest.add_output("table", write_csv(out / "strichartz.csv", rows))
    manifest.add_output("summary", write_json(out / "strichartz_summary.json", {
        "plan": plan.to_dict(), "r": rep.r, "q": rep.q, "fit": rep.fit,
        "zero_gauge_relative_spread": spread, "checks": checks}))
    return checks


def cmd_study(args) -> int:
    try:
        sc = load_study_config(args.plan)
    except (ConfigError, OSError) as err:
        print(f"nlsnoise study: plan error: {err}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or default_out_dir()
    plan = sc.plan
    manifest = Manifest("study", sc.hash, study=args.study, base_seed=plan.base_seed,
                        sample_count=plan.sample_count, N=plan.solver.N, lattice_K=plan.solver.N // 2 - 1,
                        eps_grid=list(plan.eps_grid), jobs=args.jobs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.study == "bounds":
            checks = _bounds_study(sc, out, manifest)
        elif args.study == "strichartz":
            checks = _strichartz_study(sc, out, manifest)
        else:
            report = monte_carlo_sweep(plan, args.study, jobs=args.jobs)
            checks = report.checks
            manifest.add_output("table", write_csv(out / f"{args.study}.csv", report.rows))
            manifest.add_output("aggregate", write_csv(out / f"{args.study}_aggregate.csv", report.aggregates))
            manifest.add_output("summary", write_json(out / f"{args.study}_summary.json", {
                "study": report.study, "plan": report.plan, "seed_meta": report.seed_meta,
                "checks": report.checks, "failures": report.failures}))
        status = EXIT_OK if all(checks.values()) else EXIT_FAIL
        manifest.set(checks=checks, exit_status=status)
        manifest.write(out)
    except OSError as err:
        log.error("cannot write outputs to %s: %s", out, err)
        return EXIT_FAIL
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return status


COMMANDS = {"sample-noise": cmd_sample_noise, "run": cmd_run, "study": cmd_study}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
