"""Command-line front end: ``braidforge <command> ...``.

Exit codes: 0 success (and ``eq`` on equal words), 1 ``eq`` on different
words, 2 usage or input errors, 3 computational guards.
"""
import argparse
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import pandas as pd

from braidforge import pandas as frames
from braidforge import tables
from braidforge._utils import TOOL_VERSION, ComputationGuardError, build_envelope, dumps
from braidforge.monoid import label
from braidforge.normal_form import Braid
from braidforge.workbench import Workbench

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIFFERENT = 1
EXIT_USAGE = 2
EXIT_GUARD = 3

CSV_UNAVAILABLE_ERROR = "CSV output is not available for this command."
K_LIST_ERROR = "--k-list expects comma-separated non-negative integers."


@dataclass
class Output:
    """What a command produced; `frame` backs the CSV format when present."""

    payload: Any
    text: str
    frame: Optional[pd.DataFrame] = None
    exit_code: int = EXIT_OK
    lines: Optional[List[Dict[str, Any]]] = None


def _parameter(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f'"{text}" is not a rational number') from None


def _k_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(K_LIST_ERROR) from None
    if not values or any(value < 0 for value in values):
        raise argparse.ArgumentTypeError(K_LIST_ERROR)
    return values


def _braid_payload(braid: Braid) -> Dict[str, Any]:
    return {
        "normal_form": braid.labels(),
        "encoding": braid.encoding(),
        "length": braid.length,
        "height": braid.height,
    }


def _bench(args: argparse.Namespace) -> Workbench:
    return Workbench(args.n, args.monoid, seed=args.seed, tol=args.tol)


def command_nf(args: argparse.Namespace) -> Output:
    braid = _bench(args).normal_form(args.word)
    payload = {"word": args.word, **_braid_payload(braid)}
    text = f"{braid}\nlength {braid.length}\nheight {braid.height}"
    return Output(payload, text)


def command_eq(args: argparse.Namespace) -> Output:
    equal = _bench(args).equal(args.first, args.second)
    return Output(
        {"equal": equal},
        "equal" if equal else "different",
        exit_code=EXIT_OK if equal else EXIT_DIFFERENT,
    )


def command_count(args: argparse.Namespace) -> Output:
    table = _bench(args).count(args.k)
    text = "\n".join(f"{k}\t{value}" for k, value in enumerate(table.values))
    return Output(
        {"k": list(range(table.k_max + 1)), "count": list(table.values)},
        text,
        frame=frames.count_table_frame(table),
    )


def command_mobius(args: argparse.Namespace) -> Output:
    polynomial = _bench(args).mobius()
    frame = pd.DataFrame(
        {"degree": range(polynomial.degree + 1), "coefficient": polynomial.coefficients}
    )
    return Output(
        {"coefficients": list(polynomial.coefficients), "polynomial": str(polynomial)},
        str(polynomial),
        frame=frame,
    )


def command_qn(args: argparse.Namespace) -> Output:
    root = _bench(args).critical_root(args.tol)
    payload = {
        "q": root.q,
        "lo": str(root.lo),
        "hi": str(root.hi),
        "width": float(root.width),
        "exact": None if root.exact is None else str(root.exact),
    }
    value = str(root.exact) if root.exact is not None else repr(root.q)
    text = f"{value}\n[{float(root.lo)!r}, {float(root.hi)!r}]"
    return Output(payload, text)


def command_chain(args: argparse.Namespace) -> Output:
    chain = _bench(args).chain(args.p)
    frame = frames.chain_frame(chain)
    return Output(chain.to_dict(), frame.to_string(), frame=frame)


def command_sample(args: argparse.Namespace) -> Output:
    bench = _bench(args)
    length = args.j if args.kind == "infinite" else args.k
    samples = bench.sample(args.kind, args.count, length, workers=args.workers)
    lines = []
    for index, sample in enumerate(samples):
        if isinstance(sample, Braid):
            lines.append({"sample": index, **_braid_payload(sample)})
        else:
            lines.append({"sample": index, "prefix": [label(x) for x in sample]})
    text = "\n".join(
        str(sample) if isinstance(sample, Braid) else "".join(f"[{label(x)}]" for x in sample)
        for sample in samples
    )
    header = {"kind": args.kind, "count": args.count, "length": length}
    return Output(header, text, frame=frames.samples_frame(samples), lines=lines)


def command_stats(args: argparse.Namespace) -> Output:
    bench = _bench(args)
    if args.which == "delta":
        report = bench.delta_statistics(args.k, args.samples).to_dict()
    else:
        report = bench.convergence(
            args.k_list, args.j, args.samples, strict=args.strict
        ).to_dict()
    text = "\n".join(f"{key}\t{value}" for key, value in report.items())
    return Output(report, text)


def command_tables(args: argparse.Namespace) -> Output:
    text = tables.reproduce_table(args.which)
    return Output({"table": args.which, "text": text}, text.rstrip("\n"))


def command_render(args: argparse.Namespace) -> Output:
    diagram = _bench(args).render(args.word, format=args.diagram)
    if args.output is not None:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(diagram)
        LOGGER.info(f"Wrote diagram to {args.output}")
    return Output({"format": args.diagram, "diagram": diagram}, diagram.rstrip("\n"))


def _monoid_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument(
        "--monoid", choices=["artin", "dual"], default="artin", help="Monoid family"
    )
    options.add_argument("--n", type=int, default=3, help="Number of strands")
    options.add_argument(
        "--seed", type=int, default=None, help="Sampler seed, defaults to $BRAIDFORGE_SEED or 0"
    )
    options.add_argument("--tol", type=float, default=None, help="Numeric tolerance")
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braidforge",
        description="Normal forms, counting and uniform measures on braid monoids",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    parser.add_argument(
        "--format",
        dest="output_format",
        choices=["json", "csv", "text"],
        default="json",
        help="Output format",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )
    monoid = _monoid_options()
    commands = parser.add_subparsers(dest="command", required=True)

    nf = commands.add_parser("nf", parents=[monoid], help="Normal form of a word")
    nf.add_argument("word")
    nf.set_defaults(handler=command_nf)

    eq = commands.add_parser("eq", parents=[monoid], help="Word problem; exit 0 if equal")
    eq.add_argument("first")
    eq.add_argument("second")
    eq.set_defaults(handler=command_eq)

    count = commands.add_parser("count", parents=[monoid], help="Braids counted by length")
    count.add_argument("--k", type=int, required=True, help="Largest length")
    count.set_defaults(handler=command_count)

    mobius = commands.add_parser("mobius", parents=[monoid], help="Möbius polynomial")
    mobius.set_defaults(handler=command_mobius)

    qn = commands.add_parser("qn", parents=[monoid], help="Smallest root of the Möbius polynomial")
    qn.set_defaults(handler=command_qn)

    chain = commands.add_parser("chain", parents=[monoid], help="Markov chain of the factors")
    chain.add_argument("--p", type=_parameter, default=None, help="Parameter, defaults to q_n")
    chain.set_defaults(handler=command_chain)

    sample = commands.add_parser("sample", parents=[monoid], help="Random braids")
    sample.add_argument("kind", choices=["uniform", "walk", "infinite"])
    sample.add_argument("--k", type=int, default=10, help="Braid length")
    sample.add_argument("--j", type=int, default=5, help="Prefix length for infinite")
    sample.add_argument("--count", type=int, default=1)
    sample.add_argument("--workers", "--parallel", type=int, default=1)
    sample.set_defaults(handler=command_sample)

    stats = commands.add_parser("stats", parents=[monoid], help="Sampling statistics")
    stats.add_argument("which", choices=["delta", "convergence"])
    stats.add_argument("--k", type=int, default=60)
    stats.add_argument("--k-list", type=_k_list, default=[10, 20, 40])
    stats.add_argument("--j", type=int, default=2)
    stats.add_argument("--samples", type=int, default=100_000)
    stats.add_argument("--no-strict", dest="strict", action="store_false")
    stats.set_defaults(handler=command_stats)

    table = commands.add_parser("tables", help="Reproduce an explicit table")
    table.add_argument("--which", type=int, choices=tables.available_tables(), required=True)
    table.set_defaults(handler=command_tables)

    render = commands.add_parser("render", parents=[monoid], help="Braid diagram")
    render.add_argument("word")
    render.add_argument("--format", dest="diagram", choices=["ascii", "svg"], default="ascii")
    render.add_argument("--output", default=None, help="Write the diagram to this file")
    render.set_defaults(handler=command_render)
    return parser


def _metadata(args: argparse.Namespace) -> Dict[str, Any]:
    if not hasattr(args, "monoid"):
        return {}
    bench = _bench(args)
    return bench.metadata()


def _emit(output: Output, args: argparse.Namespace, write: Callable[[str], Any]):
    if args.output_format == "text":
        write(output.text + "\n")
    elif args.output_format == "csv":
        if output.frame is None:
            raise ValueError(CSV_UNAVAILABLE_ERROR)
        write(output.frame.to_csv(index=output.frame.index.name is not None))
    else:
        write(dumps(build_envelope(output.payload, _metadata(args))) + "\n")
        for line in output.lines or []:
            write(dumps(line) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))
    try:
        output = args.handler(args)
        _emit(output, args, sys.stdout.write)
    except ComputationGuardError as e:
        print(f"braidforge: {e}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as e:
        print(f"braidforge: {e}", file=sys.stderr)
        return EXIT_USAGE
    return output.exit_code


if __name__ == "__main__":
    sys.exit(main())
