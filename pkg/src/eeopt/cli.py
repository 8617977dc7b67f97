"""Command line front end.

Subcommands map one-to-one onto the experiment drivers: ``solve`` (one
instance, one solver), ``sweep`` (metric versus power budget), ``pareto``
(per-link EE boundary), ``benchmark`` (mean iteration counts), and ``grid``
(exhaustive oracle).  A JSON configuration file supplies the experiment
description; command line flags override individual fields.

Tabular results go to ``--out`` as CSV with a JSON mirror carrying the full
solver traces next to it (an ``--out`` ending in ``.json`` selects the JSON
form only); without ``--out`` the CSV goes to stdout.  Exit status: 0 on
success, 2 infeasible, 3 iteration cap with remaining gap, 64 bad
configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    InfeasibleError,
    InnerSolverError,
    IterationCapError,
)
from .experiments import (
    ExperimentConfig,
    run_benchmark,
    run_pareto,
    run_solve,
    run_sweep,
    write_csv,
    write_json,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_ITERATION_CAP = 3
EXIT_CONFIG = 64


class _Parser(argparse.ArgumentParser):
    """Argument errors surface as configuration errors (exit 64)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment description")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--out", metavar="PATH", help="result file (CSV + JSON mirror)")
    common.add_argument("--solver", metavar="NAME")
    common.add_argument("--metric", metavar="NAME")
    common.add_argument("--trials", type=int, metavar="N")
    common.add_argument("--quiet", action="store_true")
    parser = _Parser(prog="eeopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("solve", "solve one instance with one solver"),
        ("sweep", "metric versus maximum power across solvers"),
        ("pareto", "trace the per-link energy-efficiency boundary"),
        ("benchmark", "mean solver iterations versus maximum power"),
        ("grid", "exhaustive grid-search oracle"),
    ):
        sub.add_parser(name, parents=[common], help=blurb)
    return parser


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {args.config!r} does not exist")
        cfg = ExperimentConfig.from_json(path.read_text())
        data = cfg.to_dict()
    for key, value in (
        ("seed", args.seed),
        ("metric", args.metric),
        ("trials", args.trials),
        ("output", args.out),
    ):
        if value is not None:
            data[key] = value
    if args.solver is not None:
        data["solver"] = args.solver
    if args.command == "grid":
        data["solver"] = "grid"
    return ExperimentConfig.from_dict(data)


def _say(args, text) -> None:
    if not args.quiet:
        print(text)


def _emit_table(cfg, args, payload) -> None:
    if cfg.output:
        out = Path(cfg.output)
        if out.suffix == ".json":
            write_json(out, payload)
            _say(args, f"wrote {out}")
        else:
            write_csv(out, payload["columns"], payload["rows"])
            mirror = out.with_suffix(".json")
            write_json(mirror, payload)
            _say(args, f"wrote {out} and {mirror}")
    else:
        print(",".join(payload["columns"]))
        for row in payload["rows"]:
            print(",".join(str(c) for c in row))


def _run_solve_like(cfg, args) -> int:
    rep = run_solve(cfg)
    _say(
        args,
        f"{rep.solver} {rep.metric}: value={rep.value:.10g} "
        f"powers={rep.powers.tolist()} iterations={rep.outer_iterations} "
        f"status={rep.status}",
    )
    if cfg.output:
        out = Path(cfg.output)
        write_json(
            out,
            {"command": args.command, "config": cfg.to_dict(), "report": rep.to_dict()},
        )
        _say(args, f"wrote {out}")
    return EXIT_ITERATION_CAP if rep.status == "iteration-cap" else EXIT_OK


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _load_config(args)
        if args.command in ("solve", "grid"):
            return _run_solve_like(cfg, args)
        driver = {
            "sweep": run_sweep,
            "pareto": run_pareto,
            "benchmark": run_benchmark,
        }[args.command]
        payload = driver(cfg)
        _emit_table(cfg, args, payload)
        return EXIT_OK
    except ConfigError as exc:
        print(f"eeopt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"eeopt: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (IterationCapError, InnerSolverError) as exc:
        print(f"eeopt: solver gave up with a remaining gap: {exc}", file=sys.stderr)
        return EXIT_ITERATION_CAP


if __name__ == "__main__":
    sys.exit(main())
