import argparse
import logging
import os
import sys

from src.oppcost.commands import EXIT_INPUT, failure_envelope, run_command
from src.oppcost.graph import DEFAULT_VERTEX_CAP
from src.oppcost.household import DEFAULT_GRID_N, DEFAULT_MAX_ITER, DEFAULT_TOL
from src.oppcost.spanning_tree import DEFAULT_EDGE_CAP
from src.oppcost.utils import create_logger


def _env_default(name, default):
    # argparse converts string defaults with type=int, so a bad value is a usage error
    return os.getenv(name, default)


def _add_common(parser):
    parser.add_argument("--json", action="store_true",
                        help="Emit machine-readable JSON on stdout.")
    parser.add_argument("--log-dir", "--log_dir", dest="log_dir",
                        default=os.getenv("OPPCOST_LOG_DIR"),
                        help="Also write oppcost.log to this folder.")
    parser.add_argument("--verbose", action="store_true",
                        help="Log per-step diagnostics.")


def _add_graph_input(parser):
    parser.add_argument("graph_file", nargs="?",
                        help="Edge-list file: '<label> <label> <weight>' per line, '#' comments.")
    parser.add_argument("--example", action="store_true",
                        help="Use the bundled example graph instead of a file.")


def build_parser():
    parser = argparse.ArgumentParser(
        description="Opportunity-cost analysis of greedy vs dynamic programming solutions"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    path = subparsers.add_parser("path", help="Maximum-benefit path: greedy vs optimum.")
    _add_graph_input(path)
    path.add_argument("--source", required=True, help="Start vertex.")
    path.add_argument("--target", required=True, help="End vertex.")
    path.add_argument("--decisions", action="store_true",
                      help="Print the per-choice opportunity-cost table.")
    path.add_argument("--vertex-cap", "--vertex_cap", dest="vertex_cap", type=int,
                      default=_env_default("OPPCOST_VERTEX_CAP", DEFAULT_VERTEX_CAP),
                      help="Largest graph enumerated exhaustively.")
    _add_common(path)

    mst = subparsers.add_parser("mst", help="Kruskal maximum spanning tree with opportunity costs.")
    _add_graph_input(mst)
    mst.add_argument("--trace", action="store_true", help="Print per-step opportunity costs.")
    mst.add_argument("--verify", action="store_true",
                     help="Check against the brute-force oracle and the min-oppcost property.")
    mst.add_argument("--edge-cap", "--edge_cap", dest="edge_cap", type=int,
                     default=_env_default("OPPCOST_EDGE_CAP", DEFAULT_EDGE_CAP),
                     help="Largest edge count for the brute-force oracle.")
    _add_common(mst)

    producer = subparsers.add_parser("producer", help="Static producer problem.")
    producer.add_argument("--prices", required=True, help="Comma-separated prices P_1..P_N.")
    producer.add_argument("--fixed", type=float, default=1000.0, help="Fixed cost per period.")
    producer.add_argument("--quad", type=float, default=1.0, help="Quadratic cost coefficient c.")
    _add_common(producer)

    household = subparsers.add_parser("household", help="Dynamic household problem by value-function iteration.")
    household.add_argument("--beta", type=float, required=True, help="Discount factor in (0, 1).")
    household.add_argument("--delta", type=float, required=True, help="Depreciation in (0, 1].")
    household.add_argument("--alpha", type=float, required=True, help="Capital share in (0, 1).")
    household.add_argument("--A", dest="A", type=float, default=1.0, help="Productivity.")
    household.add_argument("--utility", default="log", choices=["log", "crra"], help="Utility function.")
    household.add_argument("--sigma", type=float, default=None, help="CRRA curvature (sigma != 1).")
    household.add_argument("--grid-n", "--grid_n", dest="grid_n", type=int,
                           default=_env_default("OPPCOST_GRID_N", DEFAULT_GRID_N),
                           help="Number of capital grid points.")
    household.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Sup-norm convergence tolerance.")
    household.add_argument("--max-iter", "--max_iter", dest="max_iter", type=int, default=DEFAULT_MAX_ITER,
                           help="Iteration limit.")
    household.add_argument("--compare-closed-form", "--compare_closed_form", dest="compare_closed_form",
                           action="store_true", help="Compare with the log / full-depreciation closed form.")
    household.add_argument("--simulate", type=int, default=None, metavar="T",
                           help="Simulate DP and myopic policies for T periods from K*.")
    household.add_argument("--csv", default=None, help="Write K,V,K_prime,C to this CSV file.")
    household.add_argument("--progress", action="store_true", help="Show an iteration progress bar.")
    _add_common(household)

    reproduce = subparsers.add_parser("reproduce", help="Run every worked example.")
    reproduce.add_argument("--grid-n", "--grid_n", dest="grid_n", type=int,
                           default=_env_default("OPPCOST_GRID_N", DEFAULT_GRID_N),
                           help="Number of capital grid points for the household check.")
    _add_common(reproduce)

    return parser


def parse_args(argv=None):
    return build_parser().parse_args(argv)


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad flags, which is also our validation code
        return e.code if isinstance(e.code, int) else 2

    try:
        logger = create_logger(args.log_dir, level=logging.DEBUG if args.verbose else logging.INFO)
    except OSError as e:
        output_format = "json" if args.json else "text"
        return failure_envelope(args.command, output_format, e, EXIT_INPUT).emit()

    envelope = run_command(args, logger=logger)
    return envelope.emit()


if __name__ == "__main__":
    sys.exit(main())
