"""Command-line interface.

    zitterlab run <preset|config-file> [--set k=v ...] -o DIR
    zitterlab sweep <preset|config-file> --v-d ... [--omega-d ...] -o DIR
    zitterlab verify-gauge [--points N] [--xi XI] -o DIR
    zitterlab list-presets

Exit codes: 0 success, 1 scientific-check failure, 2 usage/config error,
3 runtime failure.
"""

import argparse
import math
import os
import sys
from dataclasses import replace

from .core import DriveParams, MomentumGrid, PacketSpec, default_grid
from .dynamics import StepperConfig, StepperConfigError, default_dt
from .gauge import LaserConfig
from .observables import FitFailureError, NoOscillationError
from .scenarios import (
    PRESET_NAMES,
    Scenario,
    preset,
    run_scenario,
    run_sweep,
    verify_gauge,
)

EXIT_OK = 0
EXIT_SCIENCE = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def scenario_to_dict(s):
    return {
        "name": s.name,
        "p0_x": s.spec.p0[0], "p0_z": s.spec.p0[1],
        "sigma_p_x": s.spec.sigma_p[0], "sigma_p_z": s.spec.sigma_p[1],
        "r0_x": s.spec.r0[0], "r0_z": s.spec.r0[1],
        "v_d": s.drive.v_d, "omega_d": s.drive.omega_d, "phase": s.drive.phase,
        "grid_n": s.grid.n_x,
        "grid_halfwidth_sigmas": s.grid.p_halfwidth[0] / s.spec.sigma_p[0],
        "dt": s.stepper.dt, "scheme": s.stepper.scheme,
        "t_end": s.t_end, "sample_dt": s.sample_dt,
        "axis": s.axis, "case": s.case,
        "reference": s.reference or "",
        "n_density_snapshots": s.n_density_snapshots,
    }


def scenario_from_dict(d):
    spec = PacketSpec(
        p0=(float(d["p0_x"]), float(d["p0_z"])),
        sigma_p=(float(d["sigma_p_x"]), float(d["sigma_p_z"])),
        r0=(float(d.get("r0_x", 0.0)), float(d.get("r0_z", 0.0))),
    )
    drive = DriveParams(
        v_d=float(d["v_d"]), omega_d=float(d["omega_d"]), phase=float(d.get("phase", 0.0))
    )
    grid = default_grid(
        spec,
        n=int(float(d.get("grid_n", 256))),
        halfwidth_sigmas=float(d.get("grid_halfwidth_sigmas", 6.0)),
    )
    sample_dt = float(d.get("sample_dt", 0.5 * math.pi / drive.omega_d))
    dt = float(d["dt"]) if "dt" in d and str(d["dt"]) != "auto" else default_dt(grid, drive)
    # keep sampling commensurate with the step
    dt = sample_dt / max(int(math.ceil(sample_dt / dt - 1e-12)), 1)
    return Scenario(
        name=str(d.get("name", "custom")),
        spec=spec,
        drive=drive,
        grid=grid,
        stepper=StepperConfig(dt=dt, scheme=str(d.get("scheme", "midpoint-exponential"))),
        t_end=float(d.get("t_end", 12.0)),
        sample_dt=sample_dt,
        axis=str(d.get("axis", "x")),
        case=str(d.get("case", "a")),
        reference=str(d.get("reference", "")) or None,
        n_density_snapshots=int(float(d.get("n_density_snapshots", 5))),
    )


def read_config(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def load_scenario(name_or_path, overrides):
    if name_or_path in PRESET_NAMES:
        d = scenario_to_dict(preset(name_or_path))
    elif os.path.exists(name_or_path):
        base = scenario_to_dict(preset("fig2a-ref"))
        base.update(read_config(name_or_path))
        d = base
    else:
        raise KeyError(
            f"{name_or_path!r} is neither a preset ({', '.join(PRESET_NAMES)}) "
            "nor a config file"
        )
    for item in overrides or []:
        if "=" not in item:
            raise KeyError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        d[key.strip()] = val.strip()
    return scenario_from_dict(d)


def _parse_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def main(argv=None):
    parser = argparse.ArgumentParser(prog="zitterlab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("scenario", help="preset name or config file")
    p_run.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE")
    p_run.add_argument("-o", "--outdir", required=True)

    p_sweep = sub.add_parser("sweep", help="sweep drive parameters")
    p_sweep.add_argument("scenario", help="base preset name or config file")
    p_sweep.add_argument("--set", action="append", default=[], dest="overrides",
                         metavar="KEY=VALUE")
    p_sweep.add_argument("--v-d", required=True, help="comma-separated v_d values")
    p_sweep.add_argument("--omega-d", default=None, help="comma-separated omega_d values")
    p_sweep.add_argument("-o", "--outdir", required=True)

    p_gauge = sub.add_parser("verify-gauge", help="check the field-strength spectrum")
    p_gauge.add_argument("--points", type=int, default=10)
    p_gauge.add_argument("--omega0", type=float, default=1.0)
    p_gauge.add_argument("--xi", type=float, default=None)
    p_gauge.add_argument("--k-l", type=float, default=1.0)
    p_gauge.add_argument("-o", "--outdir", required=True)

    sub.add_parser("list-presets", help="list built-in scenarios")

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "list-presets":
            for name in PRESET_NAMES:
                print(name)
            return EXIT_OK

        if args.command == "run":
            scenario = load_scenario(args.scenario, args.overrides)
            result = run_scenario(scenario, args.outdir)
            print(f"{scenario.name}: wrote {scenario.name}.summary.txt "
                  f"(amplitude={result.fit.amplitude:.4g}, omega={result.fit.omega:.4g})")
            return EXIT_OK

        if args.command == "sweep":
            scenario = load_scenario(args.scenario, args.overrides)
            v_d = _parse_list(args.v_d)
            omega_d = _parse_list(args.omega_d) if args.omega_d else [scenario.drive.omega_d]
            result = run_sweep(scenario, v_d, omega_d, args.outdir)
            print(f"{scenario.name}: swept {len(v_d)}x{len(omega_d)} points")
            return EXIT_OK

        if args.command == "verify-gauge":
            kwargs = {"omega0": args.omega0, "k_l": args.k_l}
            if args.xi is not None:
                kwargs["xi"] = args.xi
            cfg = LaserConfig(**kwargs)
            ok, (worst_dev, worst_pt), rows = verify_gauge(cfg, args.points, args.outdir)
            for x, z, lo, hi, dev in rows:
                print(f"{x},{z},{lo},{hi},{dev}")
            if not ok:
                print(
                    f"FAIL: worst deviation {worst_dev:.3e} from +-2 at {worst_pt}",
                    file=sys.stderr,
                )
                return EXIT_SCIENCE
            return EXIT_OK
    except (NoOscillationError, FitFailureError) as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (KeyError, ValueError, StepperConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
