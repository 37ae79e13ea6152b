"""Command-line front end.

Five subcommands: ``simulate`` (observed statistics of a protocol at a
distance), ``rate`` (worst-case key rate for fixed parameters),
``optimize`` (full parameter optimization of one family), ``sweep``
(optimized rate vs distance as CSV), and ``s0scan`` (key rate across the
feasible X-basis vacuum-yield interval at a pinned Z value).

Exit codes: 0 success, 1 infeasible statistics, 2 validation or usage
error, 3 I/O error. A config file may be passed with --config or through
the DECOYKIT_CONFIG environment variable; flags override the config.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .channel import simulate_observed
from .config import RunConfig, resolve_config
from .errors import EXIT_IO, EXIT_OK, DecoyKitError, ParameterError
from .keyrate import worst_case_rate
from .optimizer import optimize
from .sources import FAMILIES, ProtocolInstance, build_protocol

_PROTOCOL_SPEC_FIELDS = {"family", "params", "n_total", "k_max"}


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _load_protocol_spec(path: str, run: RunConfig, ntot_override: float | None) -> ProtocolInstance:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ParameterError(f"protocol spec {path} must contain a JSON object")
    unknown = set(data) - _PROTOCOL_SPEC_FIELDS
    if unknown:
        raise ParameterError(f"unknown protocol spec fields: {sorted(unknown)}")
    for required in ("family", "params"):
        if required not in data:
            raise ParameterError(f"protocol spec is missing the {required!r} field")
    n_total = ntot_override if ntot_override is not None else data.get("n_total")
    if n_total is None:
        raise ParameterError("protocol spec has no n_total and --ntot was not given")
    return build_protocol(
        data["family"], data["params"], float(n_total), int(data.get("k_max", run.k_max))
    )


def _effective_config(args: argparse.Namespace) -> RunConfig:
    run = resolve_config(args.config)
    analysis_overrides = {}
    for flag, field_name in (
        ("epsilon", "epsilon"),
        ("grid", "grid"),
        ("fluct_free", "fluctuation_free"),
        ("rx2_literal", "rx2_literal"),
        ("eq18_literal", "eq18_literal"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            analysis_overrides[field_name] = value
    analysis = dataclasses.replace(run.analysis, **analysis_overrides)
    fmt = args.format if getattr(args, "format", None) else run.output_format
    channel = run.channel
    distance = getattr(args, "distance", None)
    if distance is not None:
        channel = dataclasses.replace(channel, distance_km=distance)
    return RunConfig(channel=channel, analysis=analysis, k_max=run.k_max, output_format=fmt)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out_path: str | None) -> None:
    _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", out_path)


def _emit_csv(header: list[str], rows: list[list], out_path: str | None) -> None:
    lines = [",".join(header)]
    lines += [",".join(v if isinstance(v, str) else _fmt(v) for v in row) for row in rows]
    _emit("\n".join(lines) + "\n", out_path)


def _cmd_simulate(args: argparse.Namespace) -> int:
    run = _effective_config(args)
    protocol = _load_protocol_spec(args.protocol, run, args.ntot)
    stats = simulate_observed(protocol, run.channel, validate=True)
    rows = stats.to_dict()
    if run.output_format == "json":
        _emit_json(rows, args.out)
    else:
        _emit_csv(
            ["source", "basis", "S", "T", "trials"],
            [[r["source"], r["basis"], r["S"], r["T"], r["trials"]] for r in rows],
            args.out,
        )
    return EXIT_OK


def _cmd_rate(args: argparse.Namespace) -> int:
    run = _effective_config(args)
    protocol = _load_protocol_spec(args.protocol, run, args.ntot)
    stats = simulate_observed(protocol, run.channel)
    report = worst_case_rate(protocol, stats, run.analysis)
    if run.output_format == "json":
        _emit_json(report.to_dict(), args.out)
    else:
        _emit_csv(
            ["rate", "s0_z", "s0_x"],
            [[report.rate, report.argmin_s0[0], report.argmin_s0[1]]],
            args.out,
        )
    return EXIT_OK


def _cmd_optimize(args: argparse.Namespace) -> int:
    run = _effective_config(args)
    result = optimize(
        args.family,
        run.channel,
        args.ntot,
        restarts=args.restarts,
        seed=args.seed,
        cfg=run.analysis,
        k_max=run.k_max,
    )
    if run.output_format == "json":
        _emit_json(result.to_dict(), args.out)
    else:
        names = sorted(result.best_params)
        _emit_csv(
            ["rate"] + names,
            [[result.best_rate] + [result.best_params[n] for n in names]],
            args.out,
        )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    run = _effective_config(args)
    distances = np.arange(args.from_km, args.to_km + args.step_km / 2, args.step_km)
    rows = []
    names: list[str] = []
    for distance in distances:
        channel = dataclasses.replace(run.channel, distance_km=float(distance))
        result = optimize(
            args.family,
            channel,
            args.ntot,
            restarts=args.restarts,
            seed=args.seed,
            cfg=run.analysis,
            k_max=run.k_max,
        )
        names = sorted(result.best_params)
        rows.append([float(distance), result.best_rate] + [result.best_params[n] for n in names])
    if run.output_format == "json":
        _emit_json(
            [
                {"distance_km": r[0], "rate": r[1], "params": dict(zip(names, r[2:]))}
                for r in rows
            ],
            args.out,
        )
    else:
        _emit_csv(["distance_km", "rate"] + names, rows, args.out)
    return EXIT_OK


def _cmd_s0scan(args: argparse.Namespace) -> int:
    from .decoy import s0_interval

    run = _effective_config(args)
    protocol = _load_protocol_spec(args.protocol, run, args.ntot)
    stats = simulate_observed(protocol, run.channel)
    cfg = run.analysis
    lo_z, hi_z = s0_interval(
        protocol, stats, "Z", cfg.epsilon, cfg.interval_strategy, cfg.fluctuation_free
    )
    policy = args.s0z_policy
    if policy == "lower":
        s0_z = lo_z
    elif policy == "upper":
        s0_z = hi_z
    else:
        try:
            s0_z = float(policy)
        except ValueError:
            raise ParameterError(
                f"s0z policy must be 'lower', 'upper' or a number, got {policy!r}"
            ) from None
    report = worst_case_rate(protocol, stats, cfg, want_trace=True, s0_z_fixed=s0_z)
    rows = [[row[0], row[1], row[2]] for row in report.scan_trace]
    if run.output_format == "json":
        _emit_json([{"s0_x": r[0], "s0_z": r[1], "R": r[2]} for r in rows], args.out)
    else:
        _emit_csv(["s0_x", "s0_z", "R"], rows, args.out)
    return EXIT_OK


def _positive(value: str) -> float:
    v = float(value)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a JSON run configuration")
    common.add_argument("--epsilon", type=float, help="failure probability per bound")
    common.add_argument("--grid", type=int, help="scan grid resolution per axis")
    common.add_argument("--fluct-free", dest="fluct_free", action=argparse.BooleanOptionalAction,
                        help="collapse all fluctuation terms (asymptotic mode)")
    common.add_argument("--rx2-literal", dest="rx2_literal", action=argparse.BooleanOptionalAction,
                        help="reuse the Z-side phase error in the X-basis rate term")
    common.add_argument("--eq18-literal", dest="eq18_literal", action=argparse.BooleanOptionalAction,
                        help="use the observed error yield in the single-photon error bound "
                             "(default; disable for its upper fluctuation value)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--out", help="output path (default: stdout)")

    parser = argparse.ArgumentParser(
        prog="decoykit", description="Biased-basis decoy-state QKD analysis"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="observed yields and error yields of a protocol")
    p.add_argument("--protocol", required=True, help="protocol spec JSON file")
    p.add_argument("--distance", type=float, required=True, help="fiber length in km")
    p.add_argument("--ntot", type=_positive, help="total pulse count override")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("rate", parents=[common],
                       help="worst-case key rate for fixed protocol parameters")
    p.add_argument("--protocol", required=True)
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--ntot", type=_positive)
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("optimize", parents=[common],
                       help="full parameter optimization of one family")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--ntot", type=_positive, default=1e10)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep", parents=[common],
                       help="optimized key rate over a distance range")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--from", dest="from_km", type=float, required=True)
    p.add_argument("--to", dest="to_km", type=float, required=True)
    p.add_argument("--step", dest="step_km", type=_positive, required=True)
    p.add_argument("--ntot", type=_positive, default=1e10)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("s0scan", parents=[common],
                       help="key rate across the feasible X-basis vacuum-yield interval")
    p.add_argument("--protocol", required=True)
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--ntot", type=_positive)
    p.add_argument("--s0z-policy", dest="s0z_policy", default="upper",
                   help="'lower', 'upper' or an explicit Z-basis vacuum yield")
    p.set_defaults(func=_cmd_s0scan)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DecoyKitError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except (OSError, json.JSONDecodeError) as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
