"""``photon-events`` command line.

Exit status: 0 on success, 2 for configuration errors (the message names the
offending key), 3 for runtime failures such as a ray that cannot reach the
screen (the message names the event index).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod
from .core import ConfigurationError, GeometryViolation
from .detectors import DlmKind
from .experiments import (
    TRANSIENT_STREAMS,
    ExperimentConfig,
    UndefinedVisibility,
    fit_and_compare,
    oracle_profile,
    run_single_shot_ensemble,
    run_static,
    run_sweep,
    run_transient,
    transient_variant,
    visibility,
)
from .io import read_profile, screen_units, write_profile, write_sidecar

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="experiment file, or presets/<name>.cfg for a shipped preset")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="override the configured seed")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--events", type=int, default=None, help="override the main event count of the subcommand")
    p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photon-events", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="fixed detector array; --events sets emitted messengers")
    _common(p)
    p.add_argument("--no-oracle", action="store_true", help="omit the oracle_value column")

    p = sub.add_parser("sweep", help="single moving detector; --events sets n_total")
    _common(p)

    p = sub.add_parser("oracle", help="wave-theory profile on the detector grid; --events sets MC samples")
    _common(p)

    p = sub.add_parser("transient", help="|p|^2 traces under synthetic inputs; --events sets k_max")
    _common(p)

    p = sub.add_parser("ensemble", help="first clicks of fresh screens; --events sets the screen count")
    _common(p)

    p = sub.add_parser("compare", help="fit an oracle CSV onto a simulation CSV")
    p.add_argument("sim")
    p.add_argument("oracle")
    p.add_argument("--region", type=float, default=None,
                   help="half-width, in file units, of the centered visibility region")
    p.add_argument("--quiet", action="store_true")
    return parser


def _say(args, text: str) -> None:
    if not getattr(args, "quiet", False):
        print(text)


def _out(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _stem(args) -> str:
    return Path(args.config).stem


def _experiments(args) -> tuple[cfgmod.ParsedConfig, list[ExperimentConfig]]:
    parsed = cfgmod.load(args.config)
    return parsed, cfgmod.build_experiment(parsed, args.seed)


def _oracle_values(config: ExperimentConfig, positions=None) -> np.ndarray | None:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return oracle_profile(config, positions).values
    except ValueError:
        return None


def _summary(result, config: ExperimentConfig, oracle) -> dict:
    info = {
        "emitted": result.emitted,
        "received": result.total_received,
        "clicks": result.total_clicks,
        "missed": result.missed,
        "discarded": result.discarded,
        "clicks_per_received": result.detected_ratio,
        "clicks_per_emitted": result.clicks_per_emitted,
    }
    if oracle is not None and np.any(oracle > 0) and result.total_clicks > 0:
        cmp = fit_and_compare(result, oracle)
        info.update(scale=cmp.scale, rms=cmp.rms, visibility_sim=cmp.visibility_sim,
                    visibility_oracle=cmp.visibility_oracle)
    return info


def _print_summary(args, label: str, info: dict) -> None:
    parts = [f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items()]
    _say(args, f"{label}: " + " ".join(parts))


def cmd_run(args) -> int:
    parsed, configs = _experiments(args)
    if parsed.has("sweep"):
        raise ConfigurationError("this config has a [sweep] section; use the sweep subcommand", "sweep")
    config = configs[0]
    if args.events is not None:
        config = replace(config, emitted=args.events, received_per_detector=None)
    result = run_static(config)
    oracle = None if args.no_oracle else _oracle_values(config)
    path = _out(args, f"{_stem(args)}.csv")
    write_profile(path, screen_units(config.geometry.kind.angular, result.positions),
                  result.clicks, result.received, oracle)
    info = _summary(result, config, oracle)
    write_sidecar(path, parsed.resolved(), config.seed, info)
    _print_summary(args, str(path), info)
    return 0


def cmd_sweep(args) -> int:
    parsed, configs = _experiments(args)
    if not parsed.has("sweep"):
        raise ConfigurationError("missing section [sweep]", "sweep")
    for config in configs:
        if args.events is not None:
            config = replace(config, sweep=replace(config.sweep, n_total=args.events))
        result = run_sweep(config)
        oracle = _oracle_values(config, result.positions)
        path = _out(args, f"{_stem(args)}_sweeps{config.sweep.n_sweeps}.csv")
        write_profile(path, screen_units(True, result.positions), result.clicks, result.received, oracle)
        info = _summary(result, config, oracle)
        info["events_per_visit"] = config.sweep.events_per_visit
        write_sidecar(path, parsed.resolved(), config.seed, info)
        _print_summary(args, str(path), info)
    return 0


def cmd_oracle(args) -> int:
    parsed, configs = _experiments(args)
    config = configs[0]
    if args.events is not None:
        config = replace(config, oracle_samples=args.events)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        profile = oracle_profile(config)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    path = _out(args, f"{_stem(args)}_oracle.csv")
    write_profile(path, screen_units(config.geometry.kind.angular, profile.positions), oracle=profile.values)
    write_sidecar(path, parsed.resolved(), config.seed)
    _say(args, f"{path}: {len(profile)} positions")
    return 0


def cmd_transient(args) -> int:
    parsed = cfgmod.load(args.config)
    seed = cfgmod.seed_from(parsed, args.seed)
    g = parsed.get
    k_max = args.events if args.events is not None else g("run", "events", 3000)
    streams = g("run", "streams", ["sqrt", "half", "full"])
    kinds = g("run", "variants", ["I", "II"])
    for s in streams:
        if s not in TRANSIENT_STREAMS:
            raise ConfigurationError(f"unknown stream {s!r}", "streams")
    columns, names = [], []
    for kind in kinds:
        try:
            variant = transient_variant(
                DlmKind(kind), g("model", "gamma", 0.999), g("model", "kappa", 0.9),
                g("model", "w0", 0.9), (g("model", "p0_x", 1.0), g("model", "p0_y", 0.0)),
            )
        except ValueError as exc:
            raise ConfigurationError(f"[model] {exc}", "variants") from None
        for j, stream in enumerate(streams):
            # one stream per message law, shared by all variants
            columns.append(run_transient(variant, stream, int(k_max), seed + j))
            names.append(f"{kind}_{stream}")
    path = _out(args, f"{_stem(args)}.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(["k"] + names) + "\n")
        for k in range(int(k_max)):
            fh.write(",".join([str(k + 1)] + [f"{c[k]:.9g}" for c in columns]) + "\n")
    write_sidecar(path, parsed.resolved(), seed)
    _say(args, f"{path}: {len(names)} traces of {k_max} events")
    return 0


def cmd_ensemble(args) -> int:
    parsed, configs = _experiments(args)
    config = configs[0]
    screens = args.events if args.events is not None else parsed.get("run", "screens", 1000)
    result = run_single_shot_ensemble(config, int(screens))
    oracle = _oracle_values(config)
    path = _out(args, f"{_stem(args)}_ensemble.csv")
    write_profile(path, screen_units(config.geometry.kind.angular, result.positions),
                  clicks=result.histogram, oracle=oracle)
    info = {"screens": int(screens), "no_click": result.no_click,
            "mean_events": float(result.events.mean())}
    try:
        info["visibility"] = visibility(result.histogram)
    except UndefinedVisibility:
        pass
    write_sidecar(path, parsed.resolved(), config.seed, info)
    _print_summary(args, str(path), info)
    return 0


def cmd_compare(args) -> int:
    sim = read_profile(args.sim)
    ref = read_profile(args.oracle)
    if "clicks" not in sim:
        raise ConfigurationError(f"{args.sim} has no clicks column", "clicks")
    if "oracle_value" not in ref:
        raise ConfigurationError(f"{args.oracle} has no oracle_value column", "oracle_value")
    if sim["position"].shape != ref["position"].shape or not np.allclose(sim["position"], ref["position"]):
        raise ConfigurationError("position grids of the two files differ", "position")
    region = None
    if args.region is not None:
        region = np.abs(sim["position"]) <= args.region
    cmp = fit_and_compare(sim["clicks"], ref["oracle_value"], region)
    print(f"scale={cmp.scale:.9g} rms={cmp.rms:.9g} "
          f"visibility_sim={cmp.visibility_sim:.9g} visibility_oracle={cmp.visibility_oracle:.9g}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "transient": cmd_transient,
    "ensemble": cmd_ensemble,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        key = f" (key: {exc.key})" if exc.key else ""
        print(f"configuration error: {exc}{key}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryViolation as exc:
        where = f" (event {exc.event})" if exc.event is not None else ""
        print(f"runtime error: {exc}{where}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UndefinedVisibility, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
