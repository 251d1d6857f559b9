"""Command-line interface: run a Monte Carlo batch, sweep a parameter, or
validate the solvers against their oracles."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from .config import EnergyModel, SystemConfig, load_config_file, make_config
from .errors import IrsimError
from .harness import ALGORITHMS, emit_report, run_monte_carlo

_DB_KEYS = {
    "sigma2": "dBm", "P_max": "dBm", "xi_t": "dBi", "xi_r": "dBi",
    "P_BS": "dBW", "P_u": "dBm", "P_n": "dBm",
}

_SWEEP_PARAMS = {
    "Pmax": "P_max",
    "M": "M",
    "K": "K",
    "N": "N",
    "b": "b",
    "Rmin": "R_min",
}


def _config_key_help() -> str:
    lines = ["config file keys (flat 'key = value' lines, '#' comments):"]
    for f in fields(SystemConfig):
        unit = f" [{_DB_KEYS[f.name]}]" if f.name in _DB_KEYS else ""
        lines.append(f"  {f.name}{unit} (default {f.default!r})")
    for f in fields(EnergyModel):
        unit = f" [{_DB_KEYS[f.name]}]" if f.name in _DB_KEYS else ""
        lines.append(f"  {f.name}{unit} (default {f.default!r})")
    lines.append("dB-type keys are converted to linear units at load time.")
    return "\n".join(lines)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsim",
        description="IRS-assisted multi-BS mmWave downlink simulator",
        epilog=_config_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--trials", type=int, default=200,
                       help="number of scenes (default 200)")
        p.add_argument("--channels-per-scene", type=int, default=1,
                       help="independent channel draws per scene (default 1)")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides the config value)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel trial workers (default 1)")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (default ./out)")

    p_run = sub.add_parser("run", help="Monte Carlo batch for one algorithm")
    add_common(p_run)
    p_run.add_argument("--algo", choices=ALGORITHMS + ("pbf-uapc", "af-relay"),
                       default="ippu")

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over values")
    add_common(p_sweep)
    p_sweep.add_argument("--algo", choices=ALGORITHMS, default="ippu")
    p_sweep.add_argument("--param", choices=sorted(_SWEEP_PARAMS), required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values (dBm for Pmax)")

    p_val = sub.add_parser("validate", help="run the oracle/property suites")
    p_val.add_argument("--seed", type=int, default=0)
    return parser


def _load(args) -> tuple:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise IrsimError(f"--set expects KEY=VALUE, got '{item}'")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if args.config is not None:
        cfg, energy = load_config_file(args.config, overrides)
    else:
        cfg, energy = make_config(overrides)
    if args.seed is not None:
        from .config import with_updates
        cfg = with_updates(cfg, seed=args.seed)
    return cfg, energy


def _cmd_run(args) -> int:
    cfg, energy = _load(args)
    report = run_monte_carlo(cfg, energy, trials=args.trials,
                             algorithm=args.algo,
                             channels_per_scene=args.channels_per_scene,
                             workers=args.workers)
    written = emit_report(report, cfg, energy, args.out)
    print(f"{args.algo}: {report.feasible_count} feasible / "
          f"{report.infeasible_count} infeasible trials")
    print(f"mean R_sum = {report.mean_r_sum:.4f} bit/s/Hz, "
          f"mean EE = {report.mean_ee:.4f} bit/s/Hz/W")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    field_name = _SWEEP_PARAMS[args.param]
    rows = ["param,value,algorithm,trials,feasible,infeasible,"
            "mean_r_sum,std_r_sum,stderr_r_sum,mean_ee"]
    for token in args.values.split(","):
        token = token.strip()
        cfg, energy = _load(args)
        cfg, _ = _override_param(cfg, field_name, token)
        report = run_monte_carlo(cfg, energy, trials=args.trials,
                                 algorithm=args.algo,
                                 channels_per_scene=args.channels_per_scene,
                                 workers=args.workers)
        n = max(report.feasible_count, 1)
        stderr = report.std_r_sum / (n ** 0.5)
        rows.append(
            f"{args.param},{token},{args.algo},{args.trials},"
            f"{report.feasible_count},{report.infeasible_count},"
            f"{report.mean_r_sum!r},{report.std_r_sum!r},{stderr!r},"
            f"{report.mean_ee!r}"
        )
        print(f"{args.param}={token}: mean R_sum = {report.mean_r_sum:.4f} "
              f"({report.feasible_count}/{args.trials} feasible)")
    args.out.mkdir(parents=True, exist_ok=True)
    sweep_path = args.out / "sweep.csv"
    sweep_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {sweep_path}")
    return 0


def _override_param(cfg, field_name: str, token: str):
    from .config import dbm_to_watts, with_updates

    if field_name in ("M", "K", "N", "b"):
        return with_updates(cfg, **{field_name: int(token)}), None
    if field_name == "P_max":
        return with_updates(cfg, P_max=dbm_to_watts(float(token))), None
    return with_updates(cfg, **{field_name: float(token)}), None


def _cmd_validate(args) -> int:
    from .validate import run_all_checks

    failures = run_all_checks(seed=args.seed)
    print(f"{failures} check(s) failed" if failures else "all checks passed")
    return 1 if failures else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_validate(args)
    except IrsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
