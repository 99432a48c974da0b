"""Rendering of metric reports, batch traces and live pipeline steps."""

import logging
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any

import yaml
from rich.console import Console
from rich.table import Table
from rich.text import Text

from crossroad.models import PipelineOutcome, Predicted, Report, Scenario, Unregistered
from crossroad.pipeline import BatchResult, RoutePredictor, format_report_line
from crossroad.trace import Step

logger = logging.getLogger(__name__)

TSV_HEADER = "class\tprecision\trecall\tf1-score\tsupport"

STEP_STYLES = {
    "PlateDetected": "dim",
    "PlateRecognized": "cyan",
    "RegistryHit": "green",
    "RegistryMiss": "yellow",
    "FrequencySent": "dim",
    "VelocityComputed": "blue",
    "DeltaComputed": "blue",
    "Predicted": "bold green",
    "Terminated": "bold yellow",
}


def report_table(report: Report, title: str | None = None) -> Table:
    """Build a precision/recall table with rows S, T and the three averages."""
    table = Table(title=title, show_header=True, header_style="bold", padding=(0, 1))
    table.add_column("", justify="right")
    for name in ("precision", "recall", "f1-score", "support"):
        table.add_column(name, justify="right")

    if report.is_empty:
        table.caption = "no scored runs"
        return table
    for i, (name, m) in enumerate(report.rows()):
        table.add_row(
            name,
            f"{m.precision:.3f}",
            f"{m.recall:.3f}",
            f"{m.f1:.3f}",
            str(m.support),
            end_section=(i == 1),
        )
    return table


def format_tsv(report: Report) -> str:
    """Render the report as tab-separated text; stable byte for byte."""
    lines = [TSV_HEADER]
    lines.extend(
        f"{name}\t{m.precision:.3f}\t{m.recall:.3f}\t{m.f1:.3f}\t{m.support}"
        for name, m in report.rows()
    )
    return "\n".join(lines) + "\n"


def _outcome_to_dict(
    outcome: PipelineOutcome | None, error: str | None
) -> dict[str, Any]:
    """Describe a run's result for the trace file.

    Args:
        outcome: The run's outcome, None if it errored.
        error: Error message of a failed run.

    Returns:
        A mapping with a "result" key and the result's fields.
    """
    if outcome is None:
        return {"result": "Error", "message": error}
    if isinstance(outcome, Unregistered):
        return {"result": "Unregistered"}
    return {
        "result": "Predicted",
        "label": outcome.label.value,
        "v1": outcome.v1,
        "v2": outcome.v2,
        "dv": outcome.dv,
        "mp": outcome.mp,
    }


def traces_to_list(
    scenarios: Sequence[Scenario], result: BatchResult
) -> list[dict[str, Any]]:
    """Return one mapping per run: index, plate, outcome and ordered steps."""
    errors = dict(result.errors)
    return [
        {
            "index": i,
            "plate": scenario.plate_text,
            "outcome": _outcome_to_dict(result.outcomes[i], errors.get(i)),
            "steps": result.traces[i].to_list(),
        }
        for i, scenario in enumerate(scenarios)
    ]


def save_traces(
    scenarios: Sequence[Scenario], result: BatchResult, path: str | Path
) -> None:
    """Write the batch traces as YAML in fixed field order."""
    text = yaml.safe_dump(
        traces_to_list(scenarios, result), sort_keys=False, default_flow_style=False
    )
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    logger.info("Saved %d traces to %s", len(result.traces), path)


class StepPrinter:
    """Prints pipeline steps to a console as they happen.

    Attributes:
        console: Destination console.
        runs: Number of finished runs seen so far.
    """

    def __init__(self, console: Console) -> None:
        """Initialize the printer.

        Args:
            console: Console to print steps on.
        """
        self.console = console
        self.runs = 0

    def register_callbacks(self, predictor: RoutePredictor) -> None:
        """Subscribe to every step and outcome of a predictor."""
        predictor.on("step", self.print_step)
        predictor.on("outcome", self.print_outcome)

    def print_step(self, step: Step) -> None:
        """Print one step with its fields, colored by kind."""
        style = STEP_STYLES.get(step.kind, "white")
        fields = " ".join(f"{k}={v}" for k, v in asdict(step).items())
        line = Text(f"  {step.kind:<17}", style=style)
        line.append(fields)
        self.console.print(line)

    def print_outcome(self, outcome: PipelineOutcome) -> None:
        """Print the report line of a finished run."""
        self.runs += 1
        style = "green" if isinstance(outcome, Predicted) else "yellow"
        self.console.print(Text(f"  => {format_report_line(outcome)}", style=style))
