import re
import sys
import json
import logging
import argparse
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import jsonschema
import numpy as np
import pandas as pd

from kpz_integrable.core.artifacts import ArtifactWriter, RunManifest, validate_trajectory
from kpz_integrable.core.combinat import GTPattern, WeightMatrix, gt_to_tableau, permutation_matrix
from kpz_integrable.core.config import DEFAULT_CIRCLE_NODES, DEFAULT_SEED, log_level_from_env
from kpz_integrable.core.dynamics import MODELS, DynamicsConfig, simulate
from kpz_integrable.core.dynamics.base_dynamics import MAX_EVENTS
from kpz_integrable.core.exceptions import ConvergenceError, KPZError, OverflowDomainError
from kpz_integrable.core.fredholm import DET_METHODS, FREDHOLM, NYSTROM, SCHUR_SUM, lpp_cdf, tw_gue_cdf
from kpz_integrable.core.grsk import energy_report, grsk_forward
from kpz_integrable.core.kernels.airy_kernel import airy
from kpz_integrable.core.rsk import LOCAL_MOVES, RSK_BACKENDS, rsk_forward, rsk_inverse
from kpz_integrable.core.sampling import mean_and_stderr, sample_lpp_geometric
from kpz_integrable.core.verification import CHECK_NAMES, SUITES, VerifyOptions, mutated_local_move, run_suite
from kpz_integrable.core.whittaker import CONTOUR, MONTE_CARLO, loggamma_laplace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

CSV = "csv"
JSON = "json"
FORMATS = (CSV, JSON)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
MATRIX_PRESET = re.compile(r"^(\d+)x(\d+)-(ones|zeros)$")


class KPZArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- argument types ---


def _parse_number(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_matrix(text: str) -> WeightMatrix:
    """'3x3-ones', '2x4-zeros' or rows like '1,2;3,4'."""
    try:
        preset = MATRIX_PRESET.match(text.strip())
        if preset:
            rows, cols = int(preset.group(1)), int(preset.group(2))
            value = 1 if preset.group(3) == "ones" else 0
            return WeightMatrix.from_rows([[value] * cols for _ in range(rows)])
        return WeightMatrix.from_rows([[_parse_number(v) for v in row.split(",")] for row in text.split(";")])
    except (ValueError, KPZError) as e:
        raise argparse.ArgumentTypeError(f"invalid matrix '{text}': {e}")


def parse_permutation(text: str) -> WeightMatrix:
    try:
        return permutation_matrix([int(v) for v in text.split(",")])
    except (ValueError, KPZError) as e:
        raise argparse.ArgumentTypeError(f"invalid permutation '{text}': {e}")


def parse_fractions(text: str) -> List[Fraction]:
    """Comma-separated decimals kept exact, so '0.3' is 3/10."""
    try:
        return [Fraction(v.strip()) for v in text.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid number list '{text}': {e}")


def parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid number list '{text}': {e}")


def parse_pattern(text: str) -> GTPattern:
    """Rows top to bottom, e.g. '1;1,0'."""
    try:
        return GTPattern(tuple(tuple(int(v) for v in row.split(",")) for row in text.split(";")))
    except (ValueError, KPZError) as e:
        raise argparse.ArgumentTypeError(f"invalid pattern '{text}': {e}")


# --- output ---


def _jsonable(value):
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, GTPattern):
        return _jsonable(value.rows)
    if isinstance(value, WeightMatrix):
        return _jsonable(value.as_lists())
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def _manifest(args: argparse.Namespace) -> RunManifest:
    parameters = {k: _jsonable(v) for k, v in vars(args).items() if k not in ("func", "verbose", "out")}
    return RunManifest(args.command, parameters, seed=args.seed)


def _table_records(table: pd.DataFrame) -> List[Dict[str, Any]]:
    return _jsonable(table.astype(object).where(table.notna(), None).to_dict(orient="records"))


def emit_table(args: argparse.Namespace, table: pd.DataFrame) -> None:
    """CSV (or JSON records) to --out with a manifest next to it, else to stdout."""
    if args.out is None:
        if args.format == JSON:
            print(json.dumps(_table_records(table), indent=2))
        else:
            print(table.to_csv(index=False, float_format="%.15g", lineterminator="\n"), end="")
        return
    out = Path(args.out)
    with ArtifactWriter(out.parent, _manifest(args), f"{out.stem}.manifest.json") as writer:
        if args.format == JSON:
            writer.write_json(out.name, {"columns": list(table.columns), "rows": _table_records(table)})
        else:
            writer.write_table(out.name, table)


def emit_json(args: argparse.Namespace, payload: Mapping[str, Any], trajectory: bool = False) -> None:
    payload = _jsonable(payload)
    if args.out is None:
        if trajectory:
            validate_trajectory(payload)
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    out = Path(args.out)
    with ArtifactWriter(out.parent, _manifest(args), f"{out.stem}.manifest.json") as writer:
        writer.write_json(out.name, payload, trajectory=trajectory)


def print_rsk(payload: Mapping[str, Any]) -> None:
    print(f"shape: {tuple(payload['shape'])}")
    for label in ("z", "z_prime"):
        print(f"{label}:")
        for row in payload[label]:
            print("  " + " ".join(str(v) for v in row))
    for label in ("P", "Q"):
        print(f"{label} tableau:")
        for row in payload[label]:
            print("  " + " ".join(str(v) for v in row))
    if "identity" in payload:
        print(f"identity: {str(payload['identity']).lower()}")


# --- subcommands ---


def _input_matrix(args: argparse.Namespace) -> WeightMatrix:
    if args.permutation is not None:
        return args.permutation
    if args.matrix is None:
        raise argparse.ArgumentTypeError("one of --matrix or --permutation is required")
    return args.matrix


def cmd_rsk(args: argparse.Namespace) -> int:
    matrix = _input_matrix(args)
    out = rsk_forward(matrix, args.backend)
    payload: Dict[str, Any] = {
        "matrix": matrix.as_lists(),
        "shape": list(out.shape),
        "z": [list(r) for r in out.z.rows],
        "z_prime": [list(r) for r in out.z_prime.rows],
        "P": [list(r) for r in gt_to_tableau(out.z)],
        "Q": [list(r) for r in gt_to_tableau(out.z_prime)],
    }
    if args.round_trip:
        payload["identity"] = rsk_inverse(out) == matrix
    if args.out is None and args.format != JSON:
        print_rsk(payload)
    else:
        emit_json(args, payload)
    if args.round_trip and not payload["identity"]:
        logger.error("RSK round trip did not return the input matrix")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_grsk(args: argparse.Namespace) -> int:
    matrix = _input_matrix(args)
    out = grsk_forward(matrix, log_domain=args.log_domain)
    payload: Dict[str, Any] = {
        "matrix": matrix.as_lists(),
        "shape": [float(v) for v in out.shape],
        "z": [[float(v) for v in r] for r in out.z.rows],
        "z_prime": [[float(v) for v in r] for r in out.z_prime.rows],
    }
    if matrix.rows == matrix.cols:
        payload["energy"] = energy_report(matrix, out).to_dict()
    emit_json(args, payload)
    return EXIT_OK


def cmd_lpp_dist(args: argparse.Namespace) -> int:
    if len(args.p) != len(args.q):
        raise argparse.ArgumentTypeError("--p and --q need the same length")
    p_float = [float(v) for v in args.p]
    q_float = [float(v) for v in args.q]
    us = range(args.u_max + 1)
    samples = None
    if args.replicas:
        samples = sample_lpp_geometric(p_float, q_float, args.replicas, args.seed, args.threads)
    records = []
    for u in us:
        record = {
            "u": u,
            "P_schur": float(lpp_cdf(u, args.p, args.q, method=SCHUR_SUM)) if not args.no_schur else np.nan,
            "P_fredholm": lpp_cdf(u, p_float, q_float, method=FREDHOLM, nodes=args.nodes),
            "P_mc": np.nan,
            "mc_stderr": np.nan,
        }
        if samples is not None:
            record["P_mc"], record["mc_stderr"] = mean_and_stderr((samples <= u).astype(float))
        records.append(record)
    emit_table(args, pd.DataFrame.from_records(records, columns=["u", "P_schur", "P_fredholm", "P_mc", "mc_stderr"]))
    return EXIT_OK


def cmd_polymer_laplace(args: argparse.Namespace) -> int:
    records = []
    for s in args.s or [0.1, 0.5, 2.0]:
        record = {"s": s, "contour": loggamma_laplace(s, args.alpha, args.beta, method=CONTOUR)}
        if args.replicas:
            record["mc"], record["mc_stderr"] = loggamma_laplace(
                s, args.alpha, args.beta, method=MONTE_CARLO, replicas=args.replicas, seed=args.seed, threads=args.threads
            )
        else:
            record["mc"] = record["mc_stderr"] = np.nan
        records.append(record)
    emit_table(args, pd.DataFrame.from_records(records, columns=["s", "contour", "mc", "mc_stderr"]))
    return EXIT_OK


def cmd_tw_cdf(args: argparse.Namespace) -> int:
    results = [(x, tw_gue_cdf(x, nodes=args.nodes, method=args.method)) for x in args.x or [-2.0, 0.0, 2.0]]
    unconverged = [x for x, result in results if not result.converged]
    if unconverged:
        raise ConvergenceError(f"F2 not converged at x={unconverged} with {args.nodes} nodes; raise --nodes")
    table = pd.DataFrame.from_records(
        [{"x": x, "F2": result.value, "delta": result.delta} for x, result in results], columns=["x", "F2", "delta"]
    )
    emit_table(args, table)
    return EXIT_OK


def cmd_airy(args: argparse.Namespace) -> int:
    xs = np.asarray(args.x or [-2.0, 0.0, 2.0], dtype=float)
    table = pd.DataFrame({"x": xs, "Ai": airy(xs), "Ai_prime": airy(xs, derivative=True)})
    emit_table(args, table)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = DynamicsConfig(
        args.model,
        tuple(args.rates),
        q=args.q,
        horizon=args.horizon,
        seed=args.seed,
        initial=args.initial,
        max_events=args.max_events,
    )
    trajectory = simulate(config)
    if args.format == CSV:
        n = config.depth
        records = [
            {"time": e.time, "k": e.cell[0], "j": e.cell[1], **{f"lambda{i}": e.pattern[-1][i - 1] for i in range(1, n + 1)}}
            for e in trajectory.events
        ]
        columns = ["time", "k", "j"] + [f"lambda{i}" for i in range(1, n + 1)]
        emit_table(args, pd.DataFrame.from_records(records, columns=columns))
    else:
        emit_json(args, trajectory.to_dict(), trajectory=True)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    options = VerifyOptions(args.suite, seed=args.seed, threads=args.threads)
    if args.mutate_local_move:
        logger.warning("Running verify with a corrupted local move")
        options = VerifyOptions(args.suite, seed=args.seed, threads=args.threads, rule=mutated_local_move())
    report = run_suite(options, tuple(args.check or ()))
    emit_json(args, report.to_dict())
    if not report.passed:
        print(f"verify {args.suite} failed: {', '.join(report.failed)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --- parser ---


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"Random seed (default: {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=1, help="Worker threads for Monte Carlo (default: 1)")
    common.add_argument("--out", default=None, help="Output file; a <name>.manifest.json is written next to it")
    common.add_argument("--format", choices=FORMATS, default=None, help="Output format (default: per subcommand)")
    common.add_argument("-v", "--verbose", action="store_true", help="Show detailed (DEBUG) logging")
    return common


def _add_matrix_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--matrix", type=parse_matrix, help="'3x3-ones' or rows like '1,0;2,1'")
    group.add_argument("--permutation", type=parse_permutation, help="One-line permutation, e.g. '3,5,1,6,2,4,7'")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = KPZArgumentParser(
        prog="kpz",
        description="Exact and Monte Carlo computations for RSK, polymers and KPZ-class distributions",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="subcommand")
    subparsers.required = True

    rsk = subparsers.add_parser("rsk", parents=[common], help="RSK of a nonnegative integer matrix")
    _add_matrix_options(rsk)
    rsk.add_argument("--backend", choices=RSK_BACKENDS, default=LOCAL_MOVES)
    rsk.add_argument("--round-trip", action="store_true", help="Invert the output and report the identity check")
    rsk.set_defaults(func=cmd_rsk)

    grsk = subparsers.add_parser("grsk", parents=[common], help="Geometric RSK of a positive matrix")
    _add_matrix_options(grsk)
    grsk.add_argument("--log-domain", action="store_true", default=None, help="Run the local moves on logarithms")
    grsk.set_defaults(func=cmd_grsk)

    lpp = subparsers.add_parser("lpp-dist", parents=[common], help="CDF of geometric last passage time")
    lpp.add_argument("--p", type=parse_fractions, default=[Fraction(3, 10), Fraction(2, 5)])
    lpp.add_argument("--q", type=parse_fractions, default=[Fraction(3, 10), Fraction(2, 5)])
    lpp.add_argument("--u-max", type=int, default=12)
    lpp.add_argument("--nodes", type=int, default=DEFAULT_CIRCLE_NODES, help="Contour nodes of the Fredholm form")
    lpp.add_argument("--replicas", type=int, default=0, help="Monte Carlo samples (0 skips the P_mc column)")
    lpp.add_argument("--no-schur", action="store_true", help="Skip the exact Schur sum")
    lpp.set_defaults(func=cmd_lpp_dist)

    laplace = subparsers.add_parser("polymer-laplace", parents=[common], help="Laplace transform of log-gamma Z(n, n)")
    laplace.add_argument("--alpha", type=parse_floats, default=[0.9, 1.2])
    laplace.add_argument("--beta", type=parse_floats, default=[1.0, 1.1])
    laplace.add_argument("--s", type=float, action="append", help="Transform argument (repeatable)")
    laplace.add_argument("--replicas", type=int, default=0, help="Monte Carlo samples (0 skips the mc columns)")
    laplace.set_defaults(func=cmd_polymer_laplace)

    tw = subparsers.add_parser("tw-cdf", parents=[common], help="Tracy-Widom GUE distribution function")
    tw.add_argument("--x", type=float, action="append", help="Evaluation point (repeatable)")
    tw.add_argument("--nodes", type=int, default=40)
    tw.add_argument("--method", choices=DET_METHODS, default=NYSTROM)
    tw.set_defaults(func=cmd_tw_cdf)

    airy_parser = subparsers.add_parser("airy", parents=[common], help="Airy function and derivative")
    airy_parser.add_argument("--x", type=float, action="append", help="Evaluation point (repeatable)")
    airy_parser.set_defaults(func=cmd_airy)

    sim = subparsers.add_parser("simulate", parents=[common], help="Continuous-time GT pattern dynamics")
    sim.add_argument("--model", choices=MODELS, required=True)
    sim.add_argument("--rates", type=parse_floats, default=[1.0, 1.0, 1.0], help="Clock rates x_1..x_n")
    sim.add_argument("--q", type=float, default=0.0)
    sim.add_argument("--horizon", type=float, default=1.0)
    sim.add_argument("--initial", type=parse_pattern, default=None, help="Starting pattern, e.g. '1;1,0'")
    sim.add_argument("--max-events", type=int, default=MAX_EVENTS)
    sim.set_defaults(func=cmd_simulate)

    verify = subparsers.add_parser("verify", parents=[common], help="Run the acceptance checks")
    verify.add_argument("suite", choices=SUITES)
    verify.add_argument("--check", action="append", choices=CHECK_NAMES, help="Run only this check (repeatable)")
    verify.add_argument("--mutate-local-move", action="store_true", help=argparse.SUPPRESS)
    verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)

    logging.basicConfig(level=log_level_from_env(), format=LOG_FORMAT)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        parser.print_usage(sys.stderr)
        print(f"kpz: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, OverflowDomainError) as e:
        logger.exception(f"kpz {args.command} failed numerically")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KPZError, jsonschema.ValidationError) as e:
        logger.exception(f"kpz {args.command} rejected its input")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
