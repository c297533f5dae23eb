"""Command-line runner: ``geoqgate <scenario> --config <file> [--out DIR] [--seed N] [--threads N]``.

Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures (gap closure, degeneracy, integrator breakdown).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, NumericalFailure
from .scenarios import SCENARIOS, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoqgate",
        description="Run counterdiabatic geometric-gate scenarios and write CSV/JSON data files.",
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", type=Path, help="JSON scenario config (defaults are used when omitted)")
    parser.add_argument("--out", type=Path, help="output directory (default: config 'output.dir' or '.')")
    parser.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    parser.add_argument("--threads", type=int, help="worker threads; falls back to GEOQGATE_THREADS, then 1")
    return parser


def _threads(arg: int | None) -> int:
    if arg is not None:
        value = arg
    else:
        env = os.environ.get("GEOQGATE_THREADS")
        try:
            value = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"GEOQGATE_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ConfigError("thread count must be at least 1")
    return value


def _load(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _load(args.config)
        out_dir = args.out
        output = doc.get("output")
        if isinstance(output, dict) and "dir" in output:
            output = dict(output)
            out_dir = out_dir or Path(output.pop("dir"))
            doc = {**doc, "output": output}
        out_dir = out_dir or Path(".")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        result = run_scenario(args.scenario, doc, threads=_threads(args.threads), seed=args.seed)
    except ConfigError as exc:
        print(f"geoqgate: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"geoqgate: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in result.files.items():
        (out_dir / name).write_text(text)
    print(json.dumps({"scenario": args.scenario, "files": sorted(result.files), **_plain(result.summary)},
                     indent=2, default=str))
    return EXIT_OK


def _plain(summary: dict) -> dict:
    return json.loads(json.dumps(summary, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


if __name__ == "__main__":
    sys.exit(main())
