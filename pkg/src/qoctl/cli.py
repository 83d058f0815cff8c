"""Command-line entry point: ``qoctl run <config> --out <dir>``.

Exit codes: 0 success, 2 config/schema violation, 3 numerics abort,
4 file I/O failure.  Failures print a machine-readable JSON object to
stdout (and write ``error.json`` into the output directory when one is
available) so CI can gate on scenario runs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .scenarios import ConfigError, ScenarioError, run_scenario

log = logging.getLogger("qoctl")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qoctl",
        description="Config-driven quantum optimal control scenarios")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario config")
    run.add_argument("config", type=Path, help="JSON scenario config")
    run.add_argument("--out", type=Path, default=None,
                     help="output directory for summary and CSV artifacts")
    run.add_argument("--seed-field", type=Path, default=None,
                     help="CSV guess field (midpoint time, value) "
                          "overriding the config guess")
    run.add_argument("--log-level", default="warning",
                     choices=["debug", "info", "warning", "error"])
    return parser


def _fail(kind: str, exc: Exception, code: int, out_dir) -> int:
    payload = {"error": {"type": kind, "message": str(exc)}}
    text = json.dumps(payload, sort_keys=True)
    print(text)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        bundle = run_scenario(args.config, out_dir=args.out,
                              seed_field_path=args.seed_field)
    except ConfigError as exc:
        return _fail("config", exc, 2, args.out)
    except ScenarioError as exc:
        return _fail("numerics", exc, 3, args.out)
    except OSError as exc:
        return _fail("io", exc, 4, args.out)
    log.info("scenario %s finished", bundle.summary["scenario"])
    if bundle.summary_path is not None:
        print(bundle.summary_path)
    else:
        print(json.dumps(bundle.summary, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
