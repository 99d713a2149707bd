"""Command line entry point.

Exit codes: 0 success, 1 domain failure (e.g. a rejected trace),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .repository import NotFoundError, load_alert_sets_file
from .runner import RunManifest, run_simulation
from .simulator.preliminary import CATEGORIES, PrelimParams, run_preliminary
from .threatlang import check_trace_lines, dump_dfa, threat_trace_acceptor
from .world import ConfigError, ValidationError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _positive(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rescuectx", description="Mountain threat-detection pipeline simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a weather scenario end to end")
    run.add_argument("--scenario", type=int, choices=range(1, 6), required=True, metavar="{1..5}")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--duration", type=_positive, default=3600.0, help="simulated seconds")
    run.add_argument("--speedup", type=_positive, default=25.0, help="recorded only; runs never sleep")
    run.add_argument("--dump-every", type=_positive, default=None, help="simulated seconds between dumps")
    run.add_argument("--alerts", default="Alerts1",
                     help="alert set name, or FILE.toml[#NAME] to load sets from a file")
    run.add_argument("--area", default=None, help="area configuration file")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--svg", action="store_true", help="write a map snapshot at every dump")

    pre = sub.add_parser("preliminary", help="24-hour preliminary simulation")
    pre.add_argument("--seed", type=int, default=0)
    pre.add_argument("--tourists", type=float, default=200.0, help="peak expected population")
    pre.add_argument("--out", default="out", help="output directory")

    lang = sub.add_parser("lang", help="threat-language acceptor tools")
    lsub = lang.add_subparsers(dest="lang_command", required=True)
    dump = lsub.add_parser("dump-dfa", help="print the minimal acceptor")
    dump.add_argument("--out", default=None, help="write to this file instead of stdout")
    check = lsub.add_parser("check", help="validate a trace file")
    check.add_argument("trace_file")
    return parser


def _alerts(value: str) -> tuple[str, str | None]:
    if ".toml" not in value:
        return value, None
    path, _, name = value.partition("#")
    if not name:
        name = next(iter(load_alert_sets_file(path)))
    return name, path


def cmd_run(args: argparse.Namespace) -> int:
    name, path = _alerts(args.alerts)
    manifest = RunManifest(
        scenario=args.scenario, seed=args.seed, duration=args.duration, speedup=args.speedup,
        dump_every=args.dump_every, alerts=name, alerts_path=path, area_path=args.area,
        out_dir=args.out, svg=args.svg,
    )
    result = run_simulation(manifest)
    last = result.dumps[-1] if result.dumps else None
    print(f"scenario {manifest.scenario} seed {manifest.seed}: {len(result.dumps)} dumps written to {args.out}")
    if last is not None:
        print(f"tourists total={last.total} left={last.left} current={last.current} "
              f"(BTS {last.bts_located}, GPS {last.gps_located})")
        print("weather threats " + " ".join(f"{k}={v}" for k, v in last.weather_by_level.items()))
    return EXIT_OK


def cmd_preliminary(args: argparse.Namespace) -> int:
    if args.tourists < 0:
        raise ConfigError("--tourists", "must be non-negative")
    result = run_preliminary(PrelimParams(seed=args.seed, peak_population=args.tourists))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "preliminary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["reading", "hour", "interval", "tourists", "E2", "E3", "E4", "E5", "E6g", "E6a", "E6m", "E6r"])
        for r in result.rows:
            w.writerow([r.index, f"{r.hour:.1f}", r.interval, r.tourists,
                        *(r.weather[k] for k in ("E2", "E3", "E4", "E5")),
                        *(r.situational[k] for k in ("E6g", "E6a", "E6m", "E6r"))])
    with open(out / "categories.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "readings", "threats"])
        for c in CATEGORIES:
            w.writerow([c, result.categories[c], result.attributed[c]])
    print(f"{len(result.rows)} readings written to {out / 'preliminary.csv'}")
    return EXIT_OK


def cmd_lang(args: argparse.Namespace) -> int:
    if args.lang_command == "dump-dfa":
        text = dump_dfa(threat_trace_acceptor())
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(args.trace_file, encoding="utf-8") as fh:
            checked, rejected = check_trace_lines(fh)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for r in rejected:
        print(f"rejected: {r}")
    print(f"{checked - len(rejected)}/{checked} traces accepted")
    return EXIT_FAIL if rejected else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {"run": cmd_run, "preliminary": cmd_preliminary, "lang": cmd_lang}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValidationError, NotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
