"""Command-line entry point for the crossroad route predictor."""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler

from crossroad import registry as registry_store
from crossroad.classifier import (
    ALGORITHMS,
    DEFAULT_K,
    DEFAULT_MAX_DEPTH,
    accuracy,
    fit,
    load_model,
    predict_dataset,
    save_model,
)
from crossroad.datagen import GenConfig, generate
from crossroad.dataset import load_dataset, save_dataset, train_test_split
from crossroad.errors import CrossroadError
from crossroad.metrics import evaluate
from crossroad.models import RadarCalibration, Report, VehicleRecord
from crossroad.pipeline import (
    PipelineConfig,
    RoutePredictor,
    format_advisory,
    format_report_line,
)
from crossroad.plate import (
    DEFAULT_THRESHOLD,
    format_image,
    min_glyph_distance,
    parse_image,
    recognize,
    render_plate,
)
from crossroad.registry import Registry
from crossroad.report import StepPrinter, format_tsv, report_table, save_traces
from crossroad.rng import Rng, stream_for
from crossroad.scenarios import load_scenarios, save_scenarios, synthesize

logger = logging.getLogger("crossroad")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

DEFAULTS = GenConfig()

# Stream index of the scenario synthesizer, kept apart from the dataset stream.
SCENARIO_STREAM = 1


# --------------------------------------------------------------------------- #
# Flag value types (argparse turns their ValueError into exit 2)
# --------------------------------------------------------------------------- #


def _count(raw: str) -> int:
    """Parse a count flag (integer >= 0)."""
    value = int(raw)
    if value < 0:
        raise ValueError(raw)
    return value


def _positive_int(raw: str) -> int:
    """Parse an integer flag >= 1."""
    value = int(raw)
    if value < 1:
        raise ValueError(raw)
    return value


def _odd_k(raw: str) -> int:
    """Parse the KNN neighbour count (odd, >= 1)."""
    value = _positive_int(raw)
    if value % 2 == 0:
        raise ValueError(raw)
    return value


def _positive_float(raw: str) -> float:
    """Parse a finite float flag > 0."""
    value = float(raw)
    if not value > 0 or value == float("inf"):
        raise ValueError(raw)
    return value


def _nonneg_float(raw: str) -> float:
    """Parse a finite float flag >= 0."""
    value = float(raw)
    if not 0 <= value < float("inf"):
        raise ValueError(raw)
    return value


def _finite_float(raw: str) -> float:
    """Parse any finite float flag."""
    value = float(raw)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(raw)
    return value


def _probability(raw: str) -> float:
    """Parse a probability flag in [0, 1]."""
    value = float(raw)
    if not 0 <= value <= 1:
        raise ValueError(raw)
    return value


def _open_fraction(raw: str) -> float:
    """Parse a fraction flag strictly between 0 and 1."""
    value = float(raw)
    if not 0 < value < 1:
        raise ValueError(raw)
    return value


def _threshold(raw: str) -> int:
    """Parse a binarization threshold in 0..255."""
    value = int(raw)
    if not 0 <= value <= 255:
        raise ValueError(raw)
    return value


def _seed(raw: str) -> int:
    """Parse a seed flag (unsigned integer)."""
    return _count(raw)


# Every GenConfig field exposed as a flag: (field, value type).
GEN_FLAGS: list[tuple[str, Callable[[str], object]]] = [
    ("n_straight", _count),
    ("n_turn", _count),
    ("mu_dv_straight", _finite_float),
    ("sigma_dv_straight", _positive_float),
    ("mu_dv_turn", _finite_float),
    ("sigma_dv_turn", _positive_float),
    ("p_mp_straight", _probability),
    ("p_mp_turn", _probability),
    ("label_noise", _probability),
    ("seed", _seed),
]


def _add_gen_flags(parser: argparse.ArgumentParser) -> None:
    """Add one flag per GenConfig field to a subcommand parser.

    Args:
        parser: The subcommand parser to extend.
    """
    for name, kind in GEN_FLAGS:
        default = getattr(DEFAULTS, name)
        parser.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            type=kind,
            default=default,
            help=f"(default: {default})",
        )


def _gen_config(args: argparse.Namespace) -> GenConfig:
    """Build a GenConfig from the parsed generator flags."""
    return GenConfig(**{name: getattr(args, name) for name, _ in GEN_FLAGS})


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    """Add the --k and --max-depth learner flags."""
    parser.add_argument(
        "--k",
        type=_odd_k,
        default=DEFAULT_K,
        help=f"KNN neighbours (default: {DEFAULT_K})",
    )
    parser.add_argument(
        "--max-depth",
        type=_positive_int,
        default=DEFAULT_MAX_DEPTH,
        help=f"Decision tree depth limit (default: {DEFAULT_MAX_DEPTH})",
    )


def _build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with every subcommand.

    Returns:
        The configured ArgumentParser.
    """
    parser = argparse.ArgumentParser(
        prog="crossroad",
        description="Route prediction at a crossroad: data, models, simulation",
    )
    parser.add_argument(
        "--debug", action="store_true", help="Log debug detail to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Generate a synthetic route dataset")
    _add_gen_flags(p)
    p.add_argument("--out", required=True, help="Dataset file to write")

    p = sub.add_parser("train", help="Fit a classifier on a dataset")
    p.add_argument("--algo", choices=ALGORITHMS, default="dt")
    p.add_argument("--data", required=True)
    p.add_argument("--out-model", required=True)
    _add_model_flags(p)

    p = sub.add_parser("evaluate", help="Score a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", choices=("table", "tsv"), default="table")

    p = sub.add_parser("compare", help="Train and score all classifiers on one split")
    p.add_argument("--data", required=True)
    p.add_argument("--test-fraction", type=_open_fraction, default=0.5)
    p.add_argument("--seed", type=_seed, default=DEFAULTS.seed, help="Split seed")
    p.add_argument("--report", choices=("table", "tsv"), default="table")
    _add_model_flags(p)

    p = sub.add_parser("simulate", help="Run scenarios through the pipeline")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--model", required=True)
    p.add_argument(
        "--algo", choices=ALGORITHMS, help="Refuse a model of any other algorithm"
    )
    p.add_argument("--seed", type=_seed, default=DEFAULTS.seed)
    p.add_argument("--trace-out", help="Write per-run traces as YAML")
    p.add_argument("--radar-k", type=_positive_float, default=1.0)
    p.add_argument("--noise-sigma", type=_nonneg_float, default=0.0)
    p.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--verbose", action="store_true", help="Print each step as it runs")
    p.add_argument(
        "--advise", action="store_true", help="Print a driver advisory per run"
    )
    p.add_argument("--report", choices=("table", "tsv"), default="table")

    p = sub.add_parser(
        "make-scenarios", help="Synthesize a scenario batch and registry"
    )
    _add_gen_flags(p)
    p.add_argument("--out-scenarios", required=True)
    p.add_argument("--out-registry", required=True)
    p.add_argument("--unregistered-fraction", type=_probability, default=0.0)
    p.add_argument("--fo", type=_positive_float, default=100.0)
    p.add_argument("--interval", type=_positive_float, default=5.0)
    p.add_argument("--v0-mean", type=_finite_float, default=60.0)
    p.add_argument("--v0-sigma", type=_positive_float, default=5.0)

    p = sub.add_parser("plate", help="Plate image tools")
    plate_sub = p.add_subparsers(dest="plate_command", required=True)
    q = plate_sub.add_parser("render", help="Render plate text to an image file")
    q.add_argument("--text", required=True)
    q.add_argument("--out", required=True)
    q = plate_sub.add_parser("recognize", help="Read plate text from an image file")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD)
    plate_sub.add_parser("font-info", help="Show the font's minimum glyph distance")

    p = sub.add_parser("registry", help="Registry file tools")
    reg_sub = p.add_subparsers(dest="registry_command", required=True)
    q = reg_sub.add_parser("add", help="Add or replace a vehicle")
    q.add_argument("--file", required=True)
    q.add_argument("--plate", required=True)
    q.add_argument("--mp", type=int, choices=(0, 1), required=True)
    q = reg_sub.add_parser("list", help="List vehicles")
    q.add_argument("--file", required=True)
    q = reg_sub.add_parser("remove", help="Remove a vehicle")
    q.add_argument("--file", required=True)
    q.add_argument("--plate", required=True)
    return parser


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #


def _print_report(
    console: Console, report: Report, mode: str, title: str | None = None
) -> None:
    """Print a report as a rich table or as TSV.

    Args:
        console: Console for the table view.
        report: Report to print.
        mode: "table" or "tsv".
        title: Table title (unused for TSV).
    """
    if mode == "tsv":
        sys.stdout.write(format_tsv(report))
    else:
        console.print(report_table(report, title=title))


def _cmd_generate(args: argparse.Namespace, console: Console) -> int:
    """Generate a calibrated dataset and write it to --out."""
    data = generate(_gen_config(args))
    save_dataset(data, args.out)
    print(f"wrote {len(data)} samples to {args.out}")
    return EXIT_OK


def _cmd_train(args: argparse.Namespace, console: Console) -> int:
    """Fit --algo on --data, write the model file, print training accuracy."""
    data = load_dataset(args.data)
    model = fit(args.algo, data, k=args.k, max_depth=args.max_depth)
    save_model(model, args.out_model)
    print(f"training accuracy: {accuracy(model, data):.3f}")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace, console: Console) -> int:
    """Score a saved model on a dataset and print the report."""
    model = load_model(args.model)
    data = load_dataset(args.data)
    report = evaluate(predict_dataset(model, data), data.labels())
    _print_report(console, report, args.report, title=f"{model.algo} on {args.data}")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace, console: Console) -> int:
    """Train all three learners on one split and report each."""
    data = load_dataset(args.data)
    train, test = train_test_split(data, args.test_fraction, Rng(args.seed))
    summary = []
    for algo in ALGORITHMS:
        model = fit(algo, train, k=args.k, max_depth=args.max_depth)
        report = evaluate(predict_dataset(model, test), test.labels())
        if args.report == "tsv":
            print(f"# {algo}")
        _print_report(console, report, args.report, title=algo)
        summary.append(f"{algo} macro-f1 {report.macro.f1:.3f}")
    print("\n".join(summary))
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace, console: Console) -> int:
    """Run a scenario batch through the pipeline.

    Prints one report line per scenario (errors go to stderr), then the
    batch report. Exits 1 if any scenario errored.
    """
    scenarios = load_scenarios(args.scenarios)
    registry = registry_store.load(args.registry)
    model = load_model(args.model)
    config = PipelineConfig(
        calibration=RadarCalibration(k=args.radar_k, noise_sigma=args.noise_sigma),
        threshold=args.threshold,
        algo=args.algo,
    )
    predictor = RoutePredictor(registry, model, config)
    workers = args.workers
    if args.verbose:
        StepPrinter(Console(stderr=True)).register_callbacks(predictor)
        if workers > 1:
            logger.warning("--verbose runs scenarios one at a time")
            workers = 1

    result = predictor.run_batch(scenarios, Rng(args.seed), workers=workers)
    errors = dict(result.errors)
    for i, outcome in enumerate(result.outcomes):
        if outcome is None:
            print(f"SCENARIO {i} ERROR {errors[i]}", file=sys.stderr)
            continue
        print(format_report_line(outcome))
        if args.advise:
            print(f"  {format_advisory(outcome)}")

    if args.trace_out:
        save_traces(scenarios, result, args.trace_out)
    if result.report.is_empty:
        print(f"no scored runs ({result.unregistered} unregistered)")
    else:
        _print_report(console, result.report, args.report, title="simulation")
    return EXIT_RUNTIME if result.errors else EXIT_OK


def _cmd_make_scenarios(args: argparse.Namespace, console: Console) -> int:
    """Write a synthetic scenario batch and its matching registry."""
    config = _gen_config(args)
    data = generate(config)
    scenarios, registry = synthesize(
        data,
        stream_for(config.seed, SCENARIO_STREAM),
        unregistered_fraction=args.unregistered_fraction,
        f_o=args.fo,
        interval=args.interval,
        v0_mean=args.v0_mean,
        v0_sigma=args.v0_sigma,
    )
    save_scenarios(scenarios, args.out_scenarios)
    registry_store.save(registry, args.out_registry)
    print(
        f"wrote {len(scenarios)} scenarios to {args.out_scenarios} "
        f"and {len(registry)} vehicles to {args.out_registry}"
    )
    return EXIT_OK


def _cmd_plate(args: argparse.Namespace, console: Console) -> int:
    """Render, recognize, or inspect the font (plate subcommands)."""
    if args.plate_command == "render":
        image = render_plate(args.text)
        Path(args.out).write_text(format_image(image), encoding="utf-8", newline="\n")
        print(f"rendered {args.text} ({image.width}x{image.height}) to {args.out}")
    elif args.plate_command == "recognize":
        image = parse_image(Path(args.infile).read_text(encoding="utf-8"))
        print(recognize(image, threshold=args.threshold))
    else:
        d_min, a, b = min_glyph_distance()
        print(f"d_min={d_min} pair={a}/{b} correctable={(d_min - 1) // 2}")
    return EXIT_OK


def _cmd_registry(args: argparse.Namespace, console: Console) -> int:
    """Add, remove, or list registry records; list needs an existing file."""
    path = Path(args.file)
    if args.registry_command == "list":
        for record in registry_store.load(path):
            print(f"{record.plate},{record.mobility_pattern}")
        return EXIT_OK

    registry = registry_store.load(path) if path.exists() else Registry()
    if args.registry_command == "add":
        registry.upsert(VehicleRecord(plate=args.plate, mobility_pattern=args.mp))
    elif not registry.remove(args.plate):
        print(f"{args.plate} is not registered", file=sys.stderr)
        return EXIT_OK
    registry_store.save(registry, path)
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, Console], int]] = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "compare": _cmd_compare,
    "simulate": _cmd_simulate,
    "make-scenarios": _cmd_make_scenarios,
    "plate": _cmd_plate,
    "registry": _cmd_registry,
}


def _setup_logging(debug: bool) -> None:
    """Route crossroad logs to stderr through rich.

    Args:
        debug: Log every pipeline step when True, warnings only otherwise.
    """
    handler = RichHandler(
        console=Console(stderr=True), show_time=False, show_path=False
    )
    logger.handlers[:] = [handler]
    logger.setLevel(logging.DEBUG if debug else logging.WARNING)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the crossroad CLI and return its exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    _setup_logging(args.debug)
    console = Console()
    err_console = Console(stderr=True)
    try:
        return COMMANDS[args.command](args, console)
    except (CrossroadError, OSError) as exc:
        err_console.print(f"error: {exc}", style="red", markup=False, highlight=False)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
