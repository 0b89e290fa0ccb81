"""
cli.py

Command-line front end: bootstrap, ingest chunks across runs, evaluate purity and sweep k.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console
from rich.table import Table

from . import engine
from .cf import cf_variance, drift_deviation
from .config import Settings, project_version, resolve_settings
from .dataset import ChunkLoad, DatasetSpec, load_chunk, load_chunks
from .env import SWEEP_DIRECTORY
from .errors import CficaError, EmptyInput
from .evaluation import purity_of_store, render_key_values, render_table
from .snapshot import load_snapshot, save_snapshot
from .store import PointStore
from .sweep import SweepRow, run_sweep
from .util import parse_k_range, parse_selectors

__all__ = ["app"]

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="cfica",
    help="Incremental clustering of numerical data with Cluster Features and the Inverse Proximity Estimate.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console()


class OutputFormat(StrEnum):
    TEXT = "text"
    KV = "kv"
    BOTH = "both"


# Hyperparameter flags, None falls back to --config, then the env defaults
KOption = Annotated[Optional[int], typer.Option("--k", help="Number of clusters kept by merging.")]
POption = Annotated[Optional[int], typer.Option("--p", help="Farthest points kept per cluster.")]
LambdaOption = Annotated[Optional[float], typer.Option("--lambda", help="IPE threshold for joining a cluster.")]
ThetaOption = Annotated[
    Optional[float], typer.Option("--theta", help="Centroid distance below which merging is allowed.")
]
DeltaOption = Annotated[
    Optional[float], typer.Option("--delta", help="Relative mean drift that triggers a refresh.")
]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="k-means++ seed.")]
DriftOption = Annotated[
    Optional[str], typer.Option("--drift-mode", help="When to test for drift: per-point or per-chunk.")
]
ConfigOption = Annotated[Optional[Path], typer.Option("--config", help="TOML file with a [cfica] table.")]

# Dataset flags
LabelOption = Annotated[str, typer.Option("--label-col", help="Label column (1-based index or name), or none.")]
FeaturesOption = Annotated[
    Optional[str], typer.Option("--feature-cols", help="Comma separated feature columns, default all others.")
]
IdOption = Annotated[Optional[str], typer.Option("--id-col", help="Column holding integer point ids.")]
DelimiterOption = Annotated[str, typer.Option("--delimiter", help="Field delimiter, or 'whitespace'.")]
HeaderOption = Annotated[bool, typer.Option("--header/--no-header", help="Whether the first row is a header.")]


@contextmanager
def _command_errors() -> Iterator[None]:
    """
    Turn library errors into a logged message and exit status 1.
    """
    try:
        yield
    except (CficaError, OSError) as e:
        logger.error("[bold red]%s[/bold red]", e, extra={"markup": True})
        raise typer.Exit(1) from e


def _settings(
    config: Path | None,
    k: int | None,
    p: int | None,
    lambda_: float | None,
    theta: float | None,
    delta: float | None,
    seed: int | None,
    drift_mode: str | None,
) -> Settings:
    overrides = {"k": k, "p": p, "lambda": lambda_, "theta": theta, "delta": delta, "seed": seed}
    return resolve_settings(config, drift_mode=drift_mode, **overrides)


def _dataset_spec(
    label_col: str, feature_cols: str | None, id_col: str | None, delimiter: str, header: bool
) -> DatasetSpec:
    features = tuple(parse_selectors(feature_cols)) if feature_cols else ()
    return DatasetSpec(
        label_col=label_col, feature_cols=features, id_col=id_col, delimiter=delimiter, header=header
    )


def _note_dropped(load: ChunkLoad) -> None:
    if load.dropped_rows:
        console.print(f"Dropped {load.dropped_rows} rows with missing values from {load.path}.")


def _cluster_table(model: engine.Model) -> Table:
    title = f"Generation {model.generation}: {model.active_count} clusters, {model.total_points} points"
    table = Table(title=title)
    table.add_column("Cluster", justify="right")
    table.add_column("Size", justify="right")
    table.add_column("Variance", justify="right")
    table.add_column("Drift", justify="right")
    for cf in model.sorted_clusters():
        table.add_row(str(cf.cluster_id), str(cf.n), f"{cf_variance(cf):.6g}", f"{drift_deviation(cf).value:.4g}")
    return table


def _report_table(report: engine.IngestReport) -> Table:
    table = Table(title="Ingest report")
    table.add_column("Metric")
    table.add_column("Value", justify="right")
    for key, value in report.as_dict().items():
        table.add_row(key, str(value))
    return table


def _version_callback(value: bool) -> None:
    if value:
        typer.echo(f"cfica {project_version()}")
        raise typer.Exit()


@app.callback()
def main(
    ctx: typer.Context,
    version: Annotated[
        bool, typer.Option("--version", callback=_version_callback, is_eager=True, help="Show the version.")
    ] = False,
    debug: Annotated[bool, typer.Option("--debug", help="Log every placement and merge decision.")] = False,
) -> None:
    """
    Incremental clustering of numerical data.
    """
    if debug:
        logging.Logger.root.setLevel(logging.DEBUG)
    logger.debug("Running the %s command.", ctx.invoked_subcommand)


@app.command("bootstrap")
def bootstrap_cmd(
    chunk: Annotated[Path, typer.Argument(help="The initial chunk (CSV).")],
    state_out: Annotated[Path, typer.Option("--state-out", help="Where to write the state file.")],
    k: KOption = None,
    p: POption = None,
    lambda_: LambdaOption = None,
    theta: ThetaOption = None,
    delta: DeltaOption = None,
    seed: SeedOption = None,
    drift_mode: DriftOption = None,
    config: ConfigOption = None,
    label_col: LabelOption = "none",
    feature_cols: FeaturesOption = None,
    id_col: IdOption = None,
    delimiter: DelimiterOption = ",",
    header: HeaderOption = False,
) -> None:
    """
    Cluster the initial chunk with k-means and write the first state file.
    """
    with _command_errors():
        settings = _settings(config, k, p, lambda_, theta, delta, seed, drift_mode)
        load = load_chunk(chunk, _dataset_spec(label_col, feature_cols, id_col, delimiter, header))
        _note_dropped(load)
        if len(load.points) < settings.params.k:
            needed = settings.params.k
            raise EmptyInput(f"k={needed} needs at least {needed} rows, got {len(load.points)}.")

        store = PointStore()
        model = engine.bootstrap(load.points, settings.params, settings.kmeans, store)
        save_snapshot(model, store, state_out)
        console.print(_cluster_table(model))


@app.command("ingest")
def ingest_cmd(
    chunk: Annotated[Path, typer.Argument(help="The next chunk (CSV).")],
    state_in: Annotated[Path, typer.Option("--state-in", help="State file to continue from.")],
    state_out: Annotated[
        Optional[Path], typer.Option("--state-out", help="Where to write the new state, default --state-in.")
    ] = None,
    label_col: LabelOption = "none",
    feature_cols: FeaturesOption = None,
    id_col: IdOption = None,
    delimiter: DelimiterOption = ",",
    header: HeaderOption = False,
) -> None:
    """
    Ingest one chunk into an existing state.
    """
    with _command_errors():
        model, store = load_snapshot(state_in)
        load = load_chunk(
            chunk, _dataset_spec(label_col, feature_cols, id_col, delimiter, header), model.next_point_id
        )
        _note_dropped(load)
        _, report = engine.ingest_chunk(model, load.points, store)
        save_snapshot(model, store, state_out or state_in)
        console.print(_report_table(report))


@app.command("eval")
def eval_cmd(
    state_in: Annotated[Path, typer.Option("--state-in", help="State file to evaluate.")],
    output: Annotated[OutputFormat, typer.Option("--output", help="text, kv or both.")] = OutputFormat.BOTH,
) -> None:
    """
    Print the purity of the clustering against the stored labels.
    """
    with _command_errors():
        _, store = load_snapshot(state_in)
        report = purity_of_store(store)
        if output is not OutputFormat.KV:
            console.print(render_table(report))
        if output is not OutputFormat.TEXT:
            for line in render_key_values(report):
                typer.echo(line)


@app.command("run")
def run_cmd(
    chunks: Annotated[list[Path], typer.Argument(help="Chunk files in arrival order.")],
    state_out: Annotated[
        Optional[Path], typer.Option("--state-out", help="Where to write the final state.")
    ] = None,
    k: KOption = None,
    p: POption = None,
    lambda_: LambdaOption = None,
    theta: ThetaOption = None,
    delta: DeltaOption = None,
    seed: SeedOption = None,
    drift_mode: DriftOption = None,
    config: ConfigOption = None,
    label_col: LabelOption = "none",
    feature_cols: FeaturesOption = None,
    id_col: IdOption = None,
    delimiter: DelimiterOption = ",",
    header: HeaderOption = False,
) -> None:
    """
    Bootstrap on the first chunk and ingest the rest in one process.
    """
    with _command_errors():
        settings = _settings(config, k, p, lambda_, theta, delta, seed, drift_mode)
        loads = load_chunks(chunks, _dataset_spec(label_col, feature_cols, id_col, delimiter, header))
        for load in loads:
            _note_dropped(load)
        result = engine.run_protocol([load.points for load in loads], settings.params, settings.kmeans)
        if state_out is not None:
            save_snapshot(result.model, result.store, state_out)
        console.print(_cluster_table(result.model))
        for report in result.reports:
            console.print(_report_table(report))
        if all(label is not None for label in result.store.labels().values()):
            console.print(render_table(purity_of_store(result.store)))


def _sweep_table(rows: list[SweepRow]) -> Table:
    table = Table(title="Purity by k")
    table.add_column("k", justify="right")
    table.add_column("Purity", justify="right")
    table.add_column("Clusters", justify="right")
    table.add_column("State file / error")
    for row in rows:
        if row.error is None:
            table.add_row(str(row.k), f"{row.purity:.4f}", str(row.cluster_count), row.state_path)
        else:
            table.add_row(str(row.k), "-", "-", f"[red]{row.error}[/red]")
    return table


@app.command("sweep")
def sweep_cmd(
    chunks: Annotated[list[Path], typer.Argument(help="Chunk files in arrival order.")],
    k_range: Annotated[str, typer.Option("--k-range", help="k values, e.g. 2..10 or 2,3,5.")] = "2..10",
    scratch_dir: Annotated[
        Path, typer.Option("--scratch-dir", help="Directory for the per-k state files.")
    ] = Path(SWEEP_DIRECTORY),
    jobs: Annotated[int, typer.Option("--jobs", min=1, help="Parallel per-k pipelines.")] = 1,
    output: Annotated[OutputFormat, typer.Option("--output", help="text, kv or both.")] = OutputFormat.TEXT,
    p: POption = None,
    lambda_: LambdaOption = None,
    theta: ThetaOption = None,
    delta: DeltaOption = None,
    seed: SeedOption = None,
    drift_mode: DriftOption = None,
    config: ConfigOption = None,
    label_col: LabelOption = "none",
    feature_cols: FeaturesOption = None,
    id_col: IdOption = None,
    delimiter: DelimiterOption = ",",
    header: HeaderOption = False,
) -> None:
    """
    Run the whole chunked protocol for every k in a range and tabulate purity.
    """
    with _command_errors():
        try:
            ks = parse_k_range(k_range)
        except ValueError as e:
            raise typer.BadParameter(str(e), param_hint="--k-range") from e
        settings = _settings(config, ks[0], p, lambda_, theta, delta, seed, drift_mode)
        loads = load_chunks(chunks, _dataset_spec(label_col, feature_cols, id_col, delimiter, header))
        rows = run_sweep(
            [load.points for load in loads], settings.params, settings.kmeans, ks, scratch_dir, jobs=jobs
        )
        if output is not OutputFormat.KV:
            console.print(_sweep_table(rows))
        if output is not OutputFormat.TEXT:
            for row in rows:
                if row.error is not None:
                    typer.echo(f"k.{row.k}.error={row.error}")
                    continue
                typer.echo(f"k.{row.k}.purity={row.purity!r}")
                typer.echo(f"k.{row.k}.cluster_count={row.cluster_count}")
        if any(row.error is not None for row in rows):
            raise typer.Exit(1)
