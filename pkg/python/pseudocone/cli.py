from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import traceback
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pseudocone import __version__
from pseudocone.bounds import bound_curve, db_gap, write_bound_curve, write_bound_trees
from pseudocone.fundamental_cone import (
    DimensionGuardError,
    GeneratorSet,
    RayBudgetError,
    cone_inequalities,
    enumerate_rays,
    minimum_pseudo_weight,
    read_generators,
    sample_rays,
    select_subgroup,
    weight_histogram,
    write_generators,
    write_histogram,
)
from pseudocone.gf2codes import (
    BinaryMatrix,
    PseudoconeError,
    builtin,
    builtin_names,
    code_params,
    enumerate_codewords,
    min_weight_codewords,
    read_codewords,
    read_matrix,
    weight_distribution,
    write_codewords,
)
from pseudocone.simulate import SimConfig, SimplexCyclingError, SimulationError, fer_curve, write_fer_csv
from pseudocone.spanning import mst_angle_distribution, write_mst_edges

logger = logging.getLogger("pseudocone")

_EXIT_UNEXPECTED = 1
_EXIT_USAGE = 2
_EXIT_VALIDATION = 3
_EXIT_GUARD = 4
_GUARD_ERRORS = (DimensionGuardError, RayBudgetError, SimplexCyclingError)
_THREADS_ENV = "PSEUDOCONE_THREADS"
_MANIFEST_NAME = "manifest.json"
_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    matrix_source: Optional[str] = None
    generator_source: Optional[str] = None
    snr_grid: List[float] = field(default_factory=list)
    seed: int = 0
    outputs: Dict[str, str] = field(default_factory=dict)
    settings: Dict[str, object] = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> Dict[str, object]:
        return {
            "command": self.command,
            "argv": list(self.argv),
            "matrix_source": self.matrix_source,
            "generator_source": self.generator_source,
            "snr_grid": list(self.snr_grid),
            "seed": self.seed,
            "outputs": dict(self.outputs),
            "settings": dict(self.settings),
            "version": self.version,
        }

    def write(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")))
            handle.write("\n")

    @staticmethod
    def read(path: str | Path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        if not isinstance(payload, dict) or "argv" not in payload or "command" not in payload:
            raise PseudoconeError(f"Not a run manifest: {path}")
        return RunManifest(command=payload["command"],
                           argv=[str(token) for token in payload["argv"]],
                           matrix_source=payload.get("matrix_source"),
                           generator_source=payload.get("generator_source"),
                           snr_grid=[float(v) for v in payload.get("snr_grid", [])],
                           seed=int(payload.get("seed", 0)),
                           outputs=dict(payload.get("outputs", {})),
                           settings=dict(payload.get("settings", {})),
                           version=str(payload.get("version", "")))


def parse_snr_grid(text: str) -> List[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"Invalid SNR grid: {text}")
    try:
        lo, hi, step = (float(part) for part in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Invalid SNR grid: {text}") from exc
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"Invalid SNR grid: {text}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 10) for k in range(count)]


def parse_rate(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"Invalid rate: {text}") from exc


def _default_threads() -> int:
    raw = os.environ.get(_THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _add_matrix_source(parser: argparse.ArgumentParser, required: bool) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--matrix", help="Parity-check matrix file (dense rows or alist).")
    group.add_argument("--builtin", choices=builtin_names(), help="Built-in parity-check matrix.")


def _load_matrix(args: argparse.Namespace) -> Tuple[Optional[BinaryMatrix], Optional[str]]:
    if getattr(args, "builtin", None):
        return builtin(args.builtin), f"builtin:{args.builtin}"
    if getattr(args, "matrix", None):
        return read_matrix(args.matrix), args.matrix
    return None, None


def _output(args: argparse.Namespace, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _print_json(payload: Dict[str, object]) -> None:
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def cmd_rays(args: argparse.Namespace, manifest: RunManifest) -> None:
    matrix, source = _load_matrix(args)
    manifest.matrix_source = source
    system = cone_inequalities(matrix)
    if args.enumerate:
        generators = enumerate_rays(system, max_rays=args.max_rays, matrix_id=source)
    else:
        generators = sample_rays(system, args.sample, args.seed, threads=args.threads, matrix_id=source)
    if args.wp_max is not None or args.k_smallest is not None:
        generators = select_subgroup(generators, wp_at_most=args.wp_max, k_smallest=args.k_smallest, limit=args.limit)
    path = _output(args, "generators.csv")
    write_generators(generators, path)
    manifest.outputs["generators"] = str(path)
    summary: Dict[str, object] = {"rays": len(generators)}
    if len(generators):
        smallest, count = minimum_pseudo_weight(generators)
        summary.update({"min_wp": smallest, "min_wp_count": count})
    _print_json(summary)


def cmd_bounds(args: argparse.Namespace, manifest: RunManifest) -> None:
    generators = read_generators(args.generators)
    manifest.generator_source = args.generators
    manifest.snr_grid = list(args.snr)
    curve = bound_curve(generators, args.snr, args.rate, threads=args.threads, timing=not args.no_timing)
    path = _output(args, "bounds.csv")
    write_bound_curve(curve, path)
    manifest.outputs["bounds"] = str(path)
    if args.tree_out:
        write_bound_trees(curve, args.tree_out)
        manifest.outputs["trees"] = args.tree_out
    if args.target_fer is not None:
        _print_json({"target_fer": args.target_fer, "gap_db": db_gap(curve, args.target_fer)})


def cmd_sim(args: argparse.Namespace, manifest: RunManifest) -> None:
    matrix, source = _load_matrix(args)
    manifest.matrix_source = source
    manifest.snr_grid = list(args.snr)
    payload: object
    if args.mode == "ml-sub":
        if not args.codewords:
            raise SimulationError("Mode ml-sub needs --codewords")
        payload = read_codewords(args.codewords)
        manifest.generator_source = args.codewords
    elif args.mode == "lpd-sub":
        if not args.generators:
            raise SimulationError("Mode lpd-sub needs --generators")
        payload = read_generators(args.generators)
        manifest.generator_source = args.generators
    else:
        if matrix is None:
            raise SimulationError("Mode lpd-full needs --matrix or --builtin")
        payload = matrix
    rate = args.rate
    if rate is None:
        if matrix is None:
            raise SimulationError("Give --rate or a matrix to derive it from")
        rate = code_params(matrix).rate
    cfg = SimConfig(snr_db=args.snr[0], seed=args.seed, max_frames=args.max_frames,
                    rate=float(rate), target_errors=args.target_errors, threads=args.threads)
    manifest.settings = cfg.to_dict()
    estimates = fer_curve(args.mode, payload, args.snr, cfg)
    path = _output(args, "fer.csv")
    write_fer_csv(estimates, path)
    manifest.outputs["fer"] = str(path)


def cmd_angles(args: argparse.Namespace, manifest: RunManifest) -> None:
    if args.generators:
        vectors = read_generators(args.generators).matrix()
        manifest.generator_source = args.generators
    else:
        words = [word for word in read_codewords(args.codewords) if word.hamming_weight > 0]
        vectors = [word.as_array() for word in words]
        manifest.generator_source = args.codewords
    stats, tree, costs = mst_angle_distribution(vectors, bin_width=args.bin_width)
    path = _output(args, "mst_edges.csv")
    write_mst_edges(tree, costs, path)
    manifest.outputs["mst_edges"] = str(path)
    print(stats.summary())


def cmd_codewords(args: argparse.Namespace, manifest: RunManifest) -> None:
    matrix, source = _load_matrix(args)
    manifest.matrix_source = source
    manifest.settings = code_params(matrix).to_dict()
    words = enumerate_codewords(matrix)
    if args.min_weight or args.max_weight is not None:
        words = min_weight_codewords(words, max_weight=args.max_weight)
    path = _output(args, "codewords.csv")
    write_codewords(words, path)
    manifest.outputs["codewords"] = str(path)
    _print_json({str(weight): count for weight, count in weight_distribution(words).items()})


def cmd_histogram(args: argparse.Namespace, manifest: RunManifest) -> None:
    generators: GeneratorSet = read_generators(args.generators)
    manifest.generator_source = args.generators
    path = _output(args, "histogram.csv")
    write_histogram(weight_histogram(generators, args.bin_width), path)
    manifest.outputs["histogram"] = str(path)


_COMMANDS = {
    "rays": cmd_rays,
    "bounds": cmd_bounds,
    "sim": cmd_sim,
    "angles": cmd_angles,
    "codewords": cmd_codewords,
    "histogram": cmd_histogram,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="Directory for output files.")
    common.add_argument("--threads", type=int, default=_default_threads(),
                        help=f"Worker threads (default from {_THREADS_ENV} or 1).")
    common.add_argument("--seed", type=int, default=0, help="Seed for sampling and Monte-Carlo runs.")
    common.add_argument("-v", "--verbose", action="count", default=0, help="More logging on stderr.")

    parser = argparse.ArgumentParser(prog="pseudocone", description="Union bounds for LP decoding over AWGN.")
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    rays = commands.add_parser("rays", parents=[common], help="Enumerate or sample fundamental-cone generators.")
    _add_matrix_source(rays, required=True)
    mode = rays.add_mutually_exclusive_group(required=True)
    mode.add_argument("--enumerate", action="store_true", help="Exact double description (n <= 16).")
    mode.add_argument("--sample", type=int, metavar="N", help="Random LP vertices over N trials.")
    selection = rays.add_mutually_exclusive_group()
    selection.add_argument("--wp-max", type=float, help="Keep rays of pseudo-weight at most this value.")
    selection.add_argument("--k-smallest", type=int, help="Keep the k rays of smallest pseudo-weight.")
    rays.add_argument("--limit", type=int, help="Cap on rays kept by --wp-max.")
    rays.add_argument("--max-rays", type=int, default=200_000, help="Ray budget for enumeration.")

    bounds = commands.add_parser("bounds", parents=[common], help="LP-UB and ILP-UB over an SNR grid.")
    bounds.add_argument("--generators", required=True, help="Generator CSV.")
    bounds.add_argument("--snr", type=parse_snr_grid, required=True, help="SNR grid lo:hi:step in dB.")
    bounds.add_argument("--rate", type=parse_rate, required=True, help="Code rate, e.g. 57/63.")
    bounds.add_argument("--tree-out", help="Write optimizing tree edges per SNR point.")
    bounds.add_argument("--target-fer", type=float, help="Print the LP-UB to ILP-UB gap in dB at this FER.")
    bounds.add_argument("--no-timing", action="store_true", help="Write 0 in the seconds column.")

    sim = commands.add_parser("sim", parents=[common], help="Monte-Carlo frame error rate.")
    sim.add_argument("--mode", choices=["ml-sub", "lpd-sub", "lpd-full"], required=True)
    _add_matrix_source(sim, required=False)
    sim.add_argument("--generators", help="Generator CSV for lpd-sub.")
    sim.add_argument("--codewords", help="Codeword CSV for ml-sub.")
    sim.add_argument("--snr", type=parse_snr_grid, required=True, help="SNR grid lo:hi:step in dB.")
    sim.add_argument("--rate", type=parse_rate, help="Code rate (derived from the matrix when omitted).")
    sim.add_argument("--max-frames", type=int, default=100_000)
    sim.add_argument("--target-errors", type=int, default=100)

    angles = commands.add_parser("angles", parents=[common], help="MST angle distribution.")
    source = angles.add_mutually_exclusive_group(required=True)
    source.add_argument("--generators", help="Generator CSV.")
    source.add_argument("--codewords", help="Codeword CSV.")
    angles.add_argument("--bin-width", type=float, default=1.0, help="Histogram bin width in degrees.")

    codewords = commands.add_parser("codewords", parents=[common], help="Enumerate codewords of a matrix.")
    _add_matrix_source(codewords, required=True)
    codewords.add_argument("--min-weight", action="store_true", help="Keep only minimum-weight codewords.")
    codewords.add_argument("--max-weight", type=int, help="Keep nonzero codewords up to this weight.")

    histogram = commands.add_parser("histogram", parents=[common], help="Pseudo-weight histogram.")
    histogram.add_argument("--generators", required=True, help="Generator CSV.")
    histogram.add_argument("--bin-width", type=float, default=0.25)

    replay = commands.add_parser("replay", help="Re-run a command from its manifest.")
    replay.add_argument("--from-manifest", required=True, help="manifest.json written by an earlier run.")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = _LOG_LEVELS[min(verbosity, len(_LOG_LEVELS) - 1)]
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logger.setLevel(level)


def _run(args: argparse.Namespace, argv: List[str]) -> None:
    manifest = RunManifest(command=args.command, argv=argv, seed=args.seed)
    _COMMANDS[args.command](args, manifest)
    manifest.write(_output(args, _MANIFEST_NAME))


def _replay_argv(manifest: RunManifest) -> List[str]:
    argv = list(manifest.argv)
    if argv and argv[0] == "bounds" and "--no-timing" not in argv:
        argv.append("--no-timing")
    return argv


def main(argv: Optional[Sequence[str]] = None) -> int:
    tokens = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(tokens)
        if args.command == "rays" and args.limit is not None and args.wp_max is None:
            parser.error("--limit needs --wp-max")
    except SystemExit as exc:
        return _EXIT_USAGE if exc.code not in (0, None) else 0

    try:
        if args.command == "replay":
            manifest = RunManifest.read(args.from_manifest)
            if manifest.argv and manifest.argv[0] == "replay":
                raise PseudoconeError("Manifest points at another replay")
            return main(_replay_argv(manifest))
        _configure_logging(args.verbose)
        _run(args, tokens)
    except _GUARD_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_GUARD
    except (PseudoconeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except Exception:  # pylint: disable=broad-except
        traceback.print_exc()
        return _EXIT_UNEXPECTED
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
