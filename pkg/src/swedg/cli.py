"""Command line interface.

Commands: ``run <config>``, ``converge <config> --levels a..b --orders ...``,
``validate-tableaux``, ``bench list``. Exit codes: 0 success, 2 config
error, 3 numerical failure (negative depth), 4 I/O error.

The ``SWEDG_NUM_THREADS`` environment variable fixes the kernel thread
count; it must be set before the first solver import takes effect. Results
are bitwise independent of the thread count by construction.
"""

import argparse
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _configure_threads():
    n = os.environ.get("SWEDG_NUM_THREADS")
    if n is not None:
        os.environ["NUMBA_NUM_THREADS"] = n
    # keep BLAS sequential: parallel reductions there are not deterministic
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    os.environ.setdefault("MKL_NUM_THREADS", "1")


_configure_threads()


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="swedg",
        description="Discontinuous Galerkin shallow water solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("config", help="path to a config file")

    p_conv = sub.add_parser("converge", help="mesh refinement study")
    p_conv.add_argument("config", help="path to a config file")
    p_conv.add_argument("--levels", default="1..3",
                        help="level range a..b (default 1..3)")
    p_conv.add_argument("--orders", default="1,2,3",
                        help="comma-separated polynomial degrees")
    p_conv.add_argument("--csv", default=None,
                        help="write the table to this CSV file")

    sub.add_parser("validate-tableaux",
                   help="check all Butcher tableau identities")

    p_bench = sub.add_parser("bench", help="benchmark registry")
    p_bench.add_argument("action", choices=["list"])
    return parser


def _read_config(path):
    from .config import parse_config
    from .errors import ConfigError
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _cmd_run(args):
    from .config import echo_config
    from .runner import execute, final_errors
    cfg = _read_config(args.config)
    sys.stdout.write("# resolved configuration\n")
    sys.stdout.write(echo_config(cfg))
    problem, op, state, record = execute(cfg)
    print(f"completed {record.steps} steps to t = {state.t!r}")
    print(f"final mesh: {op.mesh.n_elements} elements, degree {op.degree}")
    vols = record.volumes
    if vols:
        drift = (vols[-1] - vols[0]) / vols[0]
        print(f"relative volume drift: {drift:.3e}")
    errs = final_errors(problem, op, state)
    if errs is not None:
        print(f"L2 errors vs reference: zeta {errs['zeta']:.6e} "
              f"q {errs['q']:.6e}")
    print(f"outputs written to {cfg.output.directory}/")
    return EXIT_OK


def _parse_levels(text):
    a, _, b = text.partition("..")
    return list(range(int(a), int(b or a) + 1))


def _cmd_converge(args):
    from .convergence import run_convergence
    from .output import write_csv
    cfg = _read_config(args.config)
    levels = _parse_levels(args.levels)
    orders = [int(p) for p in args.orders.split(",") if p]
    table = run_convergence(cfg, levels, orders)
    print(table.format())
    if args.csv:
        write_csv(args.csv, table.header(), table.as_rows())
        print(f"table written to {args.csv}")
    return EXIT_OK


def _cmd_validate_tableaux():
    from .tableaux import validate_all
    results = validate_all()
    for name, dev in sorted(results.items()):
        print(f"{name}: all order/coupling conditions hold "
              f"(max deviation {dev:.2e})")
    return EXIT_OK


def _cmd_bench_list():
    from .benchmarks import BENCHMARKS
    for name, desc in BENCHMARKS.items():
        print(f"{name}: {desc}")
    return EXIT_OK


def main(argv=None):
    from .errors import ConfigError, IOFailure, MeshError, NegativeDepthError
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        if args.command == "validate-tableaux":
            return _cmd_validate_tableaux()
        if args.command == "bench":
            return _cmd_bench_list()
        return EXIT_CONFIG
    except (ConfigError, MeshError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NegativeDepthError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
