"""Command-line entry point ``synth``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import bundled_scenarios, load_config
from .errors import SynthError

log = logging.getLogger("sparse_synth")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4, 5


def _run_one(source: str, out: str | None, method: str | None, plot: bool) -> tuple[int, str]:
    from .outputs import emit_outputs
    from .pipeline import run_scenario

    try:
        cfg = load_config(source)
        if method:
            cfg = cfg.with_overrides(method=method)
        report = run_scenario(cfg)
    except SynthError as exc:
        return exc.exit_code, f"{source}: {exc}"
    lines = [summary(report)]
    if out is not None:
        try:
            emit_outputs(report, out, plot=plot)
        except OSError as exc:
            return EXIT_IO, f"{source}: cannot write outputs: {exc}"
        lines.append(f"outputs written to {out}")
    return EXIT_OK, "\n".join(lines)


def summary(report) -> str:
    cfg = report.config
    lines = [f"scenario {cfg.name}: {cfg.elements} reference elements, "
             f"{cfg.samples} samples, L={cfg.pencil_L}"]
    ref = report.metrics["reference"]
    lines.append(f"  reference     PSL {ref.psl_db:8.2f} dB  null width {ref.mainlobe_null_width_u:.4f}")
    for name, sol in (("logdet", report.logdet), ("mpm", report.mpm)):
        if sol is None:
            continue
        m = report.metrics[name]
        lines.append(f"  {name:<12}  PSL {m.psl_db:8.2f} dB  null width {m.mainlobe_null_width_u:.4f}"
                     f"  elements {sol.R}")
    if report.logdet_state is not None:
        lines.append("  rank trace    " + " ".join(str(r) for r in report.rank_trace))
    if report.logdet is not None and report.mpm is not None and report.logdet.R == report.mpm.R:
        lines.append("     n     d_logdet        d_mpm")
        for i, (a, b) in enumerate(zip(report.logdet.positions, report.mpm.positions), 1):
            lines.append(f"  {i:4d} {a:12.4f} {b:12.4f}")
    return "\n".join(lines)


def cmd_run(args, force_method=None) -> int:
    method = force_method or args.method
    sources = args.config
    outs = []
    for src in sources:
        if args.out is None:
            outs.append(None)
        elif len(sources) == 1:
            outs.append(args.out)
        else:
            outs.append(str(Path(args.out) / Path(src).stem))
    jobs = max(1, args.jobs)
    plot = getattr(args, "plot", False)
    if jobs == 1 or len(sources) == 1:
        results = [_run_one(s, o, method, plot) for s, o in zip(sources, outs)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, sources, outs, [method] * len(sources),
                                    [plot] * len(sources)))
    worst = 0
    for code, text in results:
        print(text, file=sys.stdout if code == 0 else sys.stderr)
        worst = max(worst, code)
    return worst


def cmd_rank_trace(args) -> int:
    from .pipeline import run_scenario

    try:
        cfg = load_config(args.config).with_overrides(method="logdet")
        report = run_scenario(cfg)
    except SynthError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return exc.exit_code
    print("k,rank,surrogate")
    for k, (r, s) in enumerate(zip(report.rank_trace, report.surrogate_trace)):
        print(f"{k},{r},{s!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="synth",
        description="Sparse linear array synthesis by low-rank Hankel completion.",
        epilog="Bundled scenarios: " + ", ".join(bundled_scenarios()),
    )
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write result files")
    run.add_argument("--config", action="append", required=True,
                     help="config JSON file or bundled scenario name (repeatable)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--method", choices=("logdet", "mpm", "both"))
    run.add_argument("--plot", action="store_true", help="also write plot.svg")
    run.add_argument("--jobs", type=int, default=1, help="run several configs concurrently")

    rt = sub.add_parser("rank-trace", help="print the rank trace of the log-det iteration")
    rt.add_argument("--config", required=True)

    cmp_ = sub.add_parser("compare", help="run both methods side by side")
    cmp_.add_argument("--config", action="append", required=True)
    cmp_.add_argument("--out")
    cmp_.add_argument("--plot", action="store_true")
    cmp_.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args)
    if args.command == "compare":
        return cmd_run(args, force_method="both")
    return cmd_rank_trace(args)


if __name__ == "__main__":
    sys.exit(main())
