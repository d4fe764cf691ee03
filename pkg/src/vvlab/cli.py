"""Command-line entry point: run, report, equiv, validate.

Exit codes: 0 success, 2 config error, 3 solver blow-up in at least one
member, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, VvlabError
from .snapio import SnapshotFormatError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4


def _parse_members(text):
    if text is None:
        return None
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(text)]


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=1, help="worker pool size")
    p.add_argument(
        "--tolerance-profile",
        choices=("strict", "default"),
        default="default",
        help="strict tightens the PSD tolerance to 1e-12",
    )


def build_parser():
    ap = argparse.ArgumentParser(prog="vvlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve the ensemble and persist snapshots")
    _add_common(p)
    p.add_argument("--members", default=None, help="member range A..B (inclusive)")

    p = sub.add_parser("report", help="assemble the diagnostic report bundle")
    _add_common(p)

    p = sub.add_parser("equiv", help="statistical-equivalence comparison of two runs")
    _add_common(p)
    p.add_argument("--config-b", required=True, help="second experiment config")
    p.add_argument("--out-b", default=None, help="second run directory")
    p.add_argument("--table", default=None, help="output CSV path")

    p = sub.add_parser("validate", help="run the built-in oracle/property checks")
    p.add_argument("--config", default=None)
    return ap


def _load(path, profile):
    from .config import load_config

    cfg = load_config(path)
    if profile == "strict":
        cfg.psd_tol = 1e-12
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            from .orchestrate import run

            cfg = _load(args.config, args.tolerance_profile)
            manifest, recomputed = run(
                cfg, out_dir=args.out, members=_parse_members(args.members),
                threads=args.threads,
            )
            blown = [m for m, e in manifest["members"].items() if e.get("blown_up")]
            print(f"run complete: {len(manifest['members'])} members "
                  f"({len(recomputed)} computed, {len(blown)} blown up)")
            return EXIT_BLOWUP if blown else EXIT_OK

        if args.command == "report":
            from .orchestrate import report

            cfg = _load(args.config, args.tolerance_profile)
            paths = report(cfg, out_dir=args.out)
            for name in sorted(paths):
                print(f"wrote {paths[name]}")
            return EXIT_OK

        if args.command == "equiv":
            from pathlib import Path

            from .orchestrate import equivalence

            cfg_a = _load(args.config, args.tolerance_profile)
            cfg_b = _load(args.config_b, args.tolerance_profile)
            out_a = args.out or cfg_a.out_dir
            out_b = args.out_b or cfg_b.out_dir
            table = args.table or str(Path(out_a) / "equivalence.csv")
            rows = equivalence(cfg_a, out_a, cfg_b, out_b, table)
            worst = max((r.abs_diff for r in rows), default=0.0)
            print(f"wrote {table} ({len(rows)} rows, max |diff| = {worst:.6e})")
            return EXIT_OK

        if args.command == "validate":
            from .orchestrate import validate_checks

            cfg = None
            if args.config:
                cfg = _load(args.config, "default")
            results = validate_checks(cfg)
            ok_all = True
            for name, ok, detail in results:
                status = "PASS" if ok else "FAIL"
                ok_all = ok_all and ok
                print(f"[{status}] {name}: {detail}")
            return EXIT_OK if ok_all else 1

    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SnapshotFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except VvlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
