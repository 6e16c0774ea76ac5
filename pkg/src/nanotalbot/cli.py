"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 convergence error,
4 partial scan failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import decoherence, grating as grt, noninterf, pattern, scan
from .errors import ConfigError, ConvergenceError, NanoTalbotError
from .specs import ADLER, GRW

log = logging.getLogger("nanotalbot")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_PARTIAL = 0, 2, 3, 4


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=cfgmod.PRESETS)
    src.add_argument("--config", type=Path)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. --set 'protocol.t1=12 s'")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--no-plot", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nanotalbot", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pattern", parents=[common], help="density patterns")
    s.add_argument("--kinds", default="quantum,classical")
    s.add_argument("--samples", type=int, default=1025)

    s = sub.add_parser("scan", parents=[common], help="aleph over (t1, t2, fluence)")
    s.add_argument("--n-times", type=int, default=8)
    s.add_argument("--n-fluences", type=int, default=12)
    s.add_argument("--t-max", type=float, default=100.0)
    s.add_argument("--target", choices=("qc", "qcsl"), default="qc")
    s.add_argument("--workers", type=int)
    s.add_argument("--checkpoint", type=Path)
    s.add_argument("--max-cells", type=int, help=argparse.SUPPRESS)

    s = sub.add_parser("exclusion", parents=[common], help="lambda_min(r_c) curve")
    s.add_argument("--rc-min", type=float, default=1e-9)
    s.add_argument("--rc-max", type=float, default=1e-5)
    s.add_argument("--points", type=int, default=9)
    s.add_argument("--threshold", type=float, default=0.05)
    s.add_argument("--workers", type=int)

    s = sub.add_parser("noninterf", parents=[common], help="non-interferometric bounds")
    s.add_argument("--accel-noise", action="store_true",
                   help="only report the acceleration-noise requirement")
    s.add_argument("--d", type=float, default=1e-6, help="distance [m]")
    s.add_argument("--T", type=float, default=100.0, help="time [s]")
    s.add_argument("--rc-min", type=float, default=1e-9)
    s.add_argument("--rc-max", type=float, default=1e-5)
    s.add_argument("--points", type=int, default=41)

    sub.add_parser("props", parents=[common], help="derived quantities report")
    return p


def _load(args):
    if args.config is not None:
        cfg = cfgmod.load_config(args.config, base=cfgmod.load_preset("qppf-1e9"))
    else:
        cfg = cfgmod.load_preset(args.preset or "qppf-1e9")
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfg.override(key.strip(), val)
    if args.out is not None:
        cfg.values["output.dir"] = str(args.out)
    return cfg.validate()


def _write_manifest(cfg, out, args, argv):
    header = [f"nanotalbot {_version()}", f"command: {args.command}",
              f"argv: {' '.join(argv)}"]
    path = out / "manifest.cfg"
    path.write_text(cfgmod.dump_config(cfg, header), encoding="utf-8")
    return path


def cmd_pattern(cfg, args, out):
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in pattern.KINDS]
    if bad or not kinds:
        raise ConfigError(f"unknown pattern kind(s) {bad}; choose from {pattern.KINDS}")
    pats = []
    for kind in kinds:
        pat = pattern.compute_pattern(kind, cfg.protocol(), cfg.particle(), cfg.grating(),
                                      cfg.environment(), cfg.csl() if kind == "csl" else None,
                                      samples=args.samples, kernel_opts=cfg.kernel_options())
        pattern.write_pattern_csv(pat, out / f"pattern_{kind}.csv")
        pats.append(pat)
    if not args.no_plot:
        from . import plotting
        plotting.plot_patterns(pats, out / "pattern.png")
    return EXIT_OK


def _scan_specs(cfg):
    return scan.ScanSpecs(cfg.particle(), cfg.grating(), cfg.environment(), cfg.protocol(),
                          cfg.csl(), cfg.kernel_options(), cfg.window)


def cmd_scan(cfg, args, out):
    grid = scan.ScanGrid.regular(cfg.particle().mass, args.n_times, args.n_fluences, args.t_max)
    code = EXIT_OK
    try:
        result = scan.optimize_aleph(grid, _scan_specs(cfg), args.target, args.workers,
                                     args.checkpoint, args.max_cells)
    except scan.PartialScanError as exc:
        log.error("%s", exc)
        result, code = exc.result, EXIT_PARTIAL
    scan.write_field_csv(result, out / "scan_field.csv")
    if result.best is not None:
        t1, t2, f, v = result.best
        print(f"best: t1={t1:.6g} s t2={t2:.6g} s fluence={f:.6g} J/m2 aleph_{args.target}={v:.6g}")
    if not args.no_plot:
        from . import plotting
        plotting.plot_scan_field(result, out / "scan_field.png",
                                 "aleph_qc" if args.target == "qc" else "aleph_qcsl")
    return code


def cmd_exclusion(cfg, args, out):
    r_c = np.geomspace(args.rc_min, args.rc_max, args.points)
    curve = scan.exclusion_curve(_scan_specs(cfg), cfg.protocol(), cfg.grating().pulse_energy_per_area,
                                 r_c, args.threshold, workers=args.workers)
    scan.write_exclusion_csv(curve, out / "exclusion.csv")
    if not args.no_plot:
        from . import plotting
        plotting.plot_exclusion(curve, out / "exclusion.png",
                                {"GRW": (GRW.r_c, GRW.lambda_csl),
                                 "Adler": (ADLER.r_c, ADLER.lambda_csl)})
    return EXIT_OK


def cmd_noninterf(cfg, args, out):
    if args.accel_noise:
        val = noninterf.accel_noise_requirement(args.d, args.T)
        path = out / "accel_noise.csv"
        path.write_text(f"d_m,T_s,sqrt_S_aa_m_per_s2_per_sqrtHz\n{args.d:.17g},{args.T:.17g},{val:.17g}\n",
                        encoding="utf-8")
        print(f"sqrt(S_aa) = {val:.3g} m s^-2 Hz^-1/2")
        return EXIT_OK
    p, env = cfg.particle(), cfg.environment()
    r_c = np.geomspace(args.rc_min, args.rc_max, args.points)
    curves = {"environment": noninterf.bound_curve(r_c, p, env, "environment"),
              "statistics": noninterf.bound_curve(r_c, p, env, noninterf.StatisticsMode(t=args.T))}
    for name, lam in curves.items():
        noninterf.write_bound_csv(out / f"noninterf_{name}.csv", r_c, lam, name)
    if not args.no_plot:
        from . import plotting
        plotting.plot_bounds(r_c, curves, out / "noninterf.png")
    return EXIT_OK


def properties(cfg):
    p, g, env, prot = cfg.particle(), cfg.grating(), cfg.environment(), cfg.protocol()
    sigma_z, sigma_p = pattern.initial_spreads(prot.trap_frequency, prot.com_temperature, p.mass)
    budget = noninterf.diffusion_budget(p, env, cfg.csl(), cfg.dp())
    bb = decoherence.blackbody_diffusion(p, env, cfg.kernel_options().emission_form)
    return {
        "mass_amu": p.mass_amu,
        "radius_m": p.radius,
        "phi0": grt.particle_phase(p, g),
        "talbot_time_s": pattern.talbot_time(p.mass, g.period),
        "gamma_coll_per_s": decoherence.collision_rate(p, env),
        "lambda_gas_per_m2_s": budget.gas,
        "lambda_bb_scattering_per_m2_s": bb.scattering,
        "lambda_bb_absorption_per_m2_s": bb.absorption,
        "lambda_bb_emission_per_m2_s": bb.emission,
        "lambda_bb_per_m2_s": budget.blackbody,
        "lambda_csl_per_m2_s": budget.csl,
        "lambda_dp_per_m2_s": budget.dp,
        "sigma_z_m": sigma_z,
        "sigma_p_kg_m_per_s": sigma_p,
        "survival_collisions": decoherence.survival_probability(prot, p, env),
    }


def cmd_props(cfg, args, out):
    lines = [f"{k} = {v:.10g}" for k, v in properties(cfg).items()]
    (out / "props.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {"pattern": cmd_pattern, "scan": cmd_scan, "exclusion": cmd_exclusion,
            "noninterf": cmd_noninterf, "props": cmd_props}


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        out = cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(cfg, out, args, argv)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error [{exc.module or 'unknown'}]: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except NanoTalbotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())
