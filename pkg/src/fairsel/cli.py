"""``fairsel`` command line: run, baseline, run-all, report."""

from __future__ import annotations

import argparse
import logging
import sys

from fairsel.errors import FairselError
from fairsel.experiment import load_spec, run_all, run_experiment, with_overrides
from fairsel.report import write_summary

log = logging.getLogger("fairsel")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="optimizer and model seed (the split seed stays)")
    p.add_argument("--generations", type=int)
    p.add_argument("--pop-size", type=int, dest="pop_size")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairsel", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment spec")
    p.add_argument("spec")
    _add_overrides(p)

    p = sub.add_parser("baseline", help="evaluate the all-features model of a spec")
    p.add_argument("spec")
    _add_overrides(p)

    p = sub.add_parser("run-all", help="run every *.yaml spec in a directory")
    p.add_argument("directory")
    _add_overrides(p)

    p = sub.add_parser("report", help="render summary tables for a results directory")
    p.add_argument("results")
    return parser


def _overrides(args) -> dict:
    return {"seed": args.seed, "generations": args.generations, "pop_size": args.pop_size}


def _print_run(result) -> None:
    b = result.baseline
    print(f"{result.spec.name}: baseline f1={b.f1:.3f} |spd|={b.spd_abs:.3f} acc={b.accuracy:.3f}")
    if result.best is not None:
        r = result.best
        print(f"  best |spd|={r.spd_abs:.3f} f1={r.f1:.3f} acc={r.accuracy:.3f} features={r.n_selected}")
    if result.front is not None:
        print(f"  first front: {len(result.front.records)} points")
    print(f"  outputs: {result.spec.output}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("run", "baseline"):
            spec = with_overrides(
                load_spec(args.spec),
                out=args.out,
                mode="baseline" if args.command == "baseline" else None,
                **_overrides(args),
            )
            _print_run(run_experiment(spec))
        elif args.command == "run-all":
            for result in run_all(args.directory, out=args.out, **_overrides(args)):
                _print_run(result)
        else:
            print(write_summary(args.results), end="")
    except FairselError as exc:
        print(f"fairsel: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log.debug("unexpected failure", exc_info=True)
        print(f"fairsel: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
