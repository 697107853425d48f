"""Command line entry point: ``ramify run|suite|chart|norms|list``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..numtheory import format_verdict_table, verdict_table
from .charts import png_chart, svg_chart, text_grid
from .fileformat import ParseError, ValidationError, load_scenario
from .runner import bundled_paths, format_suite, reproduce_all, run_scenario


def _window(args):
    if args.window:
        return tuple(args.window)
    env = os.environ.get("RAMIFY_WINDOW")
    if env:
        parts = env.replace(",", " ").split()
        if len(parts) != 2:
            raise SystemExit(f"RAMIFY_WINDOW must hold two integers, got {env!r}")
        return int(parts[0]), int(parts[1])
    return None


def _resolve(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    for b in bundled_paths():
        if b.stem == name:
            return b
    raise SystemExit(f"no scenario file or bundled scenario named {name!r}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def cmd_run(args) -> int:
    win = _window(args)
    reports = [run_scenario(load_scenario(_resolve(f)), win) for f in args.files]
    if args.json:
        print(_dump([r.to_json() for r in reports]))
    else:
        for r in reports:
            print(r.format())
    return 0 if all(r.passed for r in reports) else 1


def cmd_suite(args) -> int:
    reports = reproduce_all(args.tag, window_override=_window(args), jobs=args.jobs)
    if args.json:
        print(_dump([r.to_json() for r in reports]))
    else:
        print(format_suite(reports))
        for r in reports:
            if not r.passed:
                print(r.format())
    return 0 if all(r.passed for r in reports) else 1


def cmd_chart(args) -> int:
    rep = run_scenario(load_scenario(_resolve(args.file)), _window(args))
    tables, run = rep.run
    key = args.page
    if key not in tables:
        key = int(key) if str(key).lstrip("-").isdigit() else key
    if key not in tables:
        have = ", ".join(str(k) for k in tables)
        raise SystemExit(f"page {args.page} not available; this scenario has: {have or 'none'}")
    table = tables[key]
    arrows = run.arrows(key) if run is not None and isinstance(key, int) else []
    title = f"{rep.name} E{key}" if isinstance(key, int) else f"{rep.name} {key}"
    region = tuple(args.region) if args.region else None
    if args.format == "text":
        text = text_grid(table, region)
    elif args.format == "svg":
        text = svg_chart(table, arrows, region, title, labels=not args.no_labels)
    else:
        if not args.out:
            raise SystemExit("PNG output needs --out")
        png_chart(table, args.out, arrows, region, title)
        print(f"wrote {args.out}")
        return 0
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_norms(args) -> int:
    reports = verdict_table(range(args.lo, args.hi + 1))
    if args.json:
        print(_dump([{"n": r.n, "gl2_order": r.gl2_order, "sl2_order": r.sl2_order,
                      "content": r.image_gcd_content, "verdict": r.verdict} for r in reports]))
    else:
        print(format_verdict_table(reports))
    return 0


def cmd_list(args) -> int:
    for p in bundled_paths():
        s = load_scenario(p)
        print(f"{s.name:<18} {s.kind:<18} {' '.join(s.tags)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ramify", description="Run and chart ramification scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)

    def windowed(p):
        p.add_argument("--window", nargs=2, type=int, metavar=("LO", "HI"),
                       help="override the internal degree window (also RAMIFY_WINDOW=LO,HI)")

    p = sub.add_parser("run", help="run scenario files and compare with their expected blocks")
    p.add_argument("files", nargs="+", help="paths or names of bundled scenarios")
    p.add_argument("--json", action="store_true")
    windowed(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="run every bundled scenario")
    p.add_argument("--tag")
    p.add_argument("--jobs", type=int, default=1, help="run scenarios on this many threads")
    p.add_argument("--json", action="store_true")
    windowed(p)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("chart", help="draw one page of a scenario")
    p.add_argument("file")
    p.add_argument("--page", default="2", help="page number, or 'tate' for the input table")
    p.add_argument("--format", choices=("text", "svg", "png"), default="text")
    p.add_argument("--out")
    p.add_argument("--region", nargs=4, type=int, metavar=("N0", "N1", "M0", "M1"))
    p.add_argument("--no-labels", action="store_true")
    windowed(p)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("norms", help="norm verdict table for GL2(Z/n)")
    p.add_argument("--from", dest="lo", type=int, default=2)
    p.add_argument("--to", dest="hi", type=int, default=30)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
