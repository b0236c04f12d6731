"""Command-line scenario runner.

Runs the policy x shortage matrix described by a JSON config file, writes
the result tables, JSON bundle, and figures, and prints one summary line
per scenario.

Exit codes: 0 success, 1 configuration problem (including bad flags),
2 runtime failure, 3 output-writing failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, config_hash, parse_config
from .engine import build_model
from .output import emit_results
from .scenarios import run_matrix

__all__ = ["main"]


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        raise _ArgumentError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="liversim",
        description="Simulate organ-allocation policies on a waiting-list "
                    "matching queue and report DDTS/LTx equity metrics.",
    )
    parser.add_argument("--config", help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--policies", help="comma-separated policy list, e.g. ESDF,SCORE,EDF")
    parser.add_argument("--shortage", help="comma-separated shortage levels, e.g. 0,0.15,0.3,0.5")
    parser.add_argument("--replications", type=int, help="replications per scenario")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", action="store_true", help="suppress summaries")
    verbosity.add_argument("--verbose", action="store_true", help="extra progress output")
    parser.add_argument("--emit-events", action="store_true",
                        help="write newline-delimited per-step event logs")
    return parser


def _event_writer_factory(out_dir: Path):
    """One ndjson event file per scenario replication."""
    out_dir.mkdir(parents=True, exist_ok=True)

    def factory(spec, rep):
        path = out_dir / f"events_{spec.policy.name}_s{int(round(spec.shortage * 100))}_r{rep}.ndjson"
        fh = path.open("w")

        def write(step_idx, now, events):
            if not (events.reneged or events.granted or events.transitions
                    or events.transplants or events.discarded or events.redrawn):
                return
            fh.write(json.dumps({
                "step": step_idx,
                "t": round(now, 9),
                "reneged": events.reneged,
                "redrawn": events.redrawn,
                "granted": events.granted,
                "transitions": events.transitions,
                "transplants": events.transplants,
                "discarded": events.discarded,
            }) + "\n")

        return write

    return factory


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if not args.config:
        print(parser.format_usage(), file=sys.stderr, end="")
        print("error: --config is required", file=sys.stderr)
        return 1

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output_dir = args.out
        if args.policies is not None:
            cfg.policies = [p.strip() for p in args.policies.split(",") if p.strip()]
        if args.shortage is not None:
            cfg.shortage_levels = [float(s) for s in args.shortage.split(",") if s.strip()]
        if args.replications is not None:
            cfg.replications = args.replications
        from .config import validate_config
        validate_config(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        model = build_model(cfg)
        if args.verbose:
            print(f"config hash {config_hash(cfg)}; "
                  f"{cfg.scenario_count()} scenarios x {cfg.replications} replications; "
                  f"{model.steps_per_year} steps/year")
        factory = None
        if args.emit_events:
            factory = _event_writer_factory(Path(cfg.output_dir) / "events")
        results = run_matrix(cfg, model, event_writer_factory=factory)
    except Exception as exc:  # noqa: BLE001 - boundary of the CLI
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2

    try:
        written = emit_results(results, cfg.output_dir, cfg)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 3

    if not args.quiet:
        for r in results:
            overall = r.rates["OVERALL"]
            print(f"{r.label}: DDTS={overall['ddts']:.3f} LTx={overall['ltx']:.3f} "
                  f"alive={overall['alive']:.3f} var={r.ddts_var:.5f} "
                  f"({r.replications} reps)")
        if args.verbose:
            for path in written:
                print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
