# === main.py ===
import argparse
import sys
from typing import List, Optional, Tuple

import controller
from config import (
    DEFAULT_AREA_SIDE_KM,
    DEFAULT_GAMMA,
    DEFAULT_KAPPA,
    get_default_topology_path,
    get_log_level,
)
from log_config import setup_logging

EXIT_OK = 0
EXIT_DENIED = 1
EXIT_CONFIG_ERROR = 2

ALGORITHM_CHOICES = ["q-path", "q-leap", "alg3-path", "alg3-leap", "baseline", "random"]

EPILOG = """output formats:
  route-single  JSON lines, one object per solution: source, destination, path,
                rounds_per_edge, fidelity, threshold, width, served,
                expected_throughput, cost
  route-multi   text summary of the allocation
  sweep         CSV: algorithm,sweep_param,sweep_value,throughput_mean,
                throughput_se,fidelity_mean,utilization_mean,denial_rate,runtime_ms
  bench         CSV: nodes,algorithm,runtime_ms_mean,samples

exit status: 0 success, 1 every request denied, 2 configuration error
environment: QROUTE_THREADS caps sweep worker processes (default 1)
"""


def _pair(text: str) -> Tuple[int, int]:
    try:
        source, destination = text.split(":")
        return int(source), int(destination)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SRC:DST, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qroute",
        description="Fidelity-guaranteed entanglement routing and purification scheduling.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--verbosity", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None,
                        help="Logging level (overrides QROUTE_LOG_LEVEL).")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-topology", help="Generate a Waxman topology file.")
    gen.add_argument("--out", required=True, help="Topology file to write.")
    gen.add_argument("--nodes", type=int, default=100)
    gen.add_argument("--capacity", type=int, default=50)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    gen.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    gen.add_argument("--area", type=float, default=DEFAULT_AREA_SIDE_KM, help="Square side in km.")

    single = commands.add_parser("route-single", help="Route one S-D pair, print JSON lines.")
    single.add_argument("--topology", default=get_default_topology_path())
    single.add_argument("--src", type=int, required=True)
    single.add_argument("--dst", type=int, required=True)
    single.add_argument("--demand", type=int, default=1)
    single.add_argument("--threshold", type=float, required=True)
    single.add_argument("--algo", choices=ALGORITHM_CHOICES, default="q-path")

    multi = commands.add_parser("route-multi", help="Allocate several S-D pairs, print a summary.")
    multi.add_argument("--topology", default=get_default_topology_path())
    multi.add_argument("--pair", type=_pair, action="append", dest="pair_list",
                       help="Explicit SRC:DST pair (repeatable).")
    multi.add_argument("--pairs", type=int, default=4, help="Pairs to sample when no --pair is given.")
    multi.add_argument("--demand", type=int, default=50)
    multi.add_argument("--threshold", type=float, default=0.7)
    multi.add_argument("--algo", choices=ALGORITHM_CHOICES, default="alg3-path")
    multi.add_argument("--alpha", type=float, default=0.5, help="Raw degree-of-freedom weight.")
    multi.add_argument("--beta", type=float, default=0.5, help="Raw resource-consumption weight.")
    multi.add_argument("--seed", type=int, default=0)

    sweep = commands.add_parser("sweep", help="Run a JSON-configured sweep, write CSV.")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default=None, help="CSV path (default: QROUTE_RESULTS_DIR/<config>.csv).")
    sweep.add_argument("--seed", type=int, default=None, help="Override the config's rng_seed.")
    sweep.add_argument("--report", default=None, help="Also write a markdown report here.")

    bench = commands.add_parser("bench", help="Time single-pair algorithms, write CSV.")
    bench.add_argument("--nodes", type=int, nargs="+", default=[100, 200, 300, 400, 500])
    bench.add_argument("--threshold", type=float, default=0.6)
    bench.add_argument("--capacity", type=int, default=10)
    bench.add_argument("--samples", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None)
    bench.add_argument("--report", default=None, help="Also write a markdown table here.")

    return parser


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return EXIT_CONFIG_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbosity or get_log_level())

    if args.command == "gen-topology":
        success, message = controller.generate_topology(
            args.out, args.nodes, args.capacity, args.seed, args.kappa, args.gamma, args.area
        )
        if not success:
            return _fail(message)
        print(message, file=sys.stderr)
        return EXIT_OK

    if args.command == "route-single":
        success, lines, message = controller.route_single(
            args.topology, args.src, args.dst, args.demand, args.threshold, args.algo
        )
        if not success:
            return _fail(message)
        sys.stdout.write(lines)
        print(message, file=sys.stderr)
        return EXIT_OK if lines else EXIT_DENIED

    if args.command == "route-multi":
        success, result, message = controller.route_multi(
            args.topology, args.pair_list, args.pairs, args.demand, args.threshold,
            args.algo, args.alpha, args.beta, args.seed,
        )
        if not success:
            return _fail(message)
        sys.stdout.write(message)
        return EXIT_DENIED if len(result.denied) == len(result.requests) else EXIT_OK

    if args.command == "sweep":
        success, _, message = controller.run_sweep_from_config(args.config, args.out, args.seed, args.report)
        if not success:
            return _fail(message)
        print(message, file=sys.stderr)
        return EXIT_OK

    success, _, message = controller.run_bench(
        args.nodes, args.threshold, args.capacity, args.samples, args.seed, args.out, args.report
    )
    if not success:
        return _fail(message)
    print(message, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
